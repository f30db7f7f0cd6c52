#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lcseq/eprocess.hpp"

namespace lcseq {

// Monte-Carlo protocol: mu grid, level, horizon, batching, replication count,
// estimator, checkpoints, base seed, MLE tolerance.
struct ExperimentConfig {
    std::vector<double> mu_values;
    double alpha = 0.1;
    int64_t horizon = 100;
    std::optional<int64_t> interval; // uniform schedule; mutually exclusive with `schedule`
    std::vector<int64_t> schedule;   // explicit times
    int64_t reps = 100;
    EstimatorSpec estimator;
    std::vector<int64_t> checkpoints = {20, 40, 60, 80, 100};
    uint64_t base_seed = 0;
    double mle_tol = 1e-7;

    void validate() const; // throws InputError naming the offending field
    BatchSchedule make_schedule() const;
};

struct RunRecord {
    double mu = 0.0;
    int64_t rep = 0;
    uint64_t seed = 0;
    std::optional<int64_t> tau;
    double final_log_r = 0.0;
    std::vector<TracePoint> trace;
    uint64_t stream_hash = 0; // FNV-1a over the sampled stream bytes
};

struct SummaryRow {
    double mu = 0.0;
    int64_t checkpoint = 0;
    double rejection_fraction = 0.0;
    int64_t n_reps = 0;
    double mean_tau = 0.0;   // over rejecting runs; NaN if none
    double median_tau = 0.0; // over rejecting runs; NaN if none
};

struct SummaryTable {
    std::vector<SummaryRow> rows; // ordered by (mu index, checkpoint)
    ExperimentConfig config;      // echo of the generating protocol
};

struct ExperimentResult {
    SummaryTable summary;
    std::vector<RunRecord> runs; // ordered by (mu index, rep)
};

// One seeded stream and e-process run per (mu, rep); aggregation of rejection
// fractions at each checkpoint. Deterministic given base_seed; a failed run
// aborts the whole experiment with (mu, rep, seed) context.
ExperimentResult run_experiment(const ExperimentConfig& config, int threads = 0);

// run_experiment once per estimator on identical seeded streams.
std::vector<ExperimentResult> compare_estimators(const ExperimentConfig& config,
                                                 std::span<const EstimatorSpec> estimators,
                                                 int threads = 0);

// run_experiment once per uniform batching interval, common random numbers.
std::vector<ExperimentResult> batching_study(const ExperimentConfig& config,
                                             std::span<const int64_t> intervals,
                                             int threads = 0);

// CSV: mu,checkpoint,rejection_fraction,n_reps,mean_tau,median_tau
void write_summary_csv(std::ostream& os, const SummaryTable& table);
// CSV: mu,rep,seed,tau,final_log_r (tau empty when the run never rejected)
void write_runs_csv(std::ostream& os, std::span<const RunRecord> runs);

// 17-significant-digit float formatting shared by all CSV/JSON output.
std::string format_double(double x);

uint64_t fnv1a_hash(std::span<const double> values);

} // namespace lcseq
