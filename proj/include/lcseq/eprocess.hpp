#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "lcseq/estimators.hpp"
#include "lcseq/lcmle.hpp"

namespace lcseq {

// Dimension is fixed to 1 throughout this artifact.
inline constexpr int64_t kDimension = 1;

// Recomputation times t_1 < t_2 < ... with t_1 >= d+1 = 2. The estimator and
// the MLE are refit exactly at these times; log R is constant in between.
struct BatchSchedule {
    std::vector<int64_t> times;

    BatchSchedule() = default;
    explicit BatchSchedule(std::vector<int64_t> ts); // validates

    // t_1 = max(interval, 2), then steps of `interval`, truncated at horizon.
    static BatchSchedule uniform(int64_t interval, int64_t horizon);
};

struct TracePoint {
    int64_t t;
    double log_r;
};

// Running state of the batched ULR e-process. Values; steps produce new states.
struct EProcessState {
    int64_t t = 0;
    std::size_t next_batch = 0;   // index into schedule.times
    int64_t last_boundary = kDimension; // end of the last scored batch; numerator
                                        // training prefix is buffer[0, last_boundary)
    double log_numerator = 0.0;   // log N_t
    double log_r = 0.0;           // log R_t, inexact-MLE correction applied
    double cumulative_gap = 0.0;  // sum of certified MLE gaps applied so far
    double last_mle_loglik = 0.0; // MLE log-likelihood at the last recomputation
    std::vector<double> buffer;
    std::vector<TracePoint> trace; // one entry per batch boundary
    bool deferred = false;         // some batch was deferred on a degenerate MLE
    bool estimator_fallback = false;
};

struct TestOutcome {
    bool rejected = false;
    std::optional<int64_t> rejection_time;
    double final_log_r = 0.0;
    std::vector<TracePoint> trace;
};

using EstimatorFn = std::function<DensityPtr(std::span<const double>)>;

EstimatorFn make_estimator_fn(const EstimatorSpec& spec);

// Appends x. If the new time is the next schedule time: trains the estimator
// on everything up to the previous boundary, adds the batch's log q-hat terms
// to the numerator, refits the MLE on the whole buffer, and sets
// log_r = log_numerator - mle_loglik - cumulative_gap. A degenerate buffer
// (all points equal) defers the batch: log_r is held and the pending batch
// widens to the next boundary.
EProcessState eprocess_step(EProcessState state, double x, const BatchSchedule& schedule,
                            const EstimatorFn& estimator, double mle_tol);

EProcessState eprocess_step(EProcessState state, double x, const BatchSchedule& schedule,
                            const EstimatorSpec& spec, double mle_tol);

// First trace time with log_r >= log(1/alpha); nullopt if never crossed.
// Trace times must be increasing.
std::optional<int64_t> rejection_time(std::span<const TracePoint> trace, double alpha);

// exp(log R) clipped to a finite double for reporting.
inline double r_value(double log_r) {
    const double v = std::exp(log_r);
    return v > 1e308 ? 1e308 : v;
}

// Runs the e-process over the whole stream (no early exit) and summarizes.
TestOutcome run_eprocess(std::span<const double> stream, const BatchSchedule& schedule,
                         const EstimatorFn& estimator, double mle_tol, double alpha,
                         EProcessState* final_state = nullptr);

// sigma_t: sum over the buffer of log truth - log MLE-fit. Nonpositive up to
// the certified gap whenever the truth is log-concave.
double sigma_diagnostic(const Density& truth, std::span<const double> buffer, double mle_tol);

// Batched prediction regret: sum over scored points of log truth - log q-hat,
// replayed over all completed batches of the schedule.
double regret_diagnostic(const Density& truth, std::span<const double> stream,
                         const BatchSchedule& schedule, const EstimatorFn& estimator);

double regret_diagnostic(const Density& truth, std::span<const double> stream,
                         const BatchSchedule& schedule, const EstimatorSpec& spec);

} // namespace lcseq
