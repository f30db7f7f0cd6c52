#include "lcseq/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "lcseq/errors.hpp"
#include "lcseq/mixture.hpp"
#include "lcseq/rng.hpp"

namespace lcseq {

void ExperimentConfig::validate() const {
    if (mu_values.empty()) throw InputError("mu_values: must be nonempty");
    for (double mu : mu_values) {
        if (!std::isfinite(mu) || mu < 0.0) {
            throw InputError("mu_values: entries must be finite and nonnegative");
        }
    }
    if (!(alpha > 0.0) || !(alpha <= 1.0)) throw InputError("alpha: must lie in (0, 1]");
    if (horizon < 1) throw InputError("horizon: must be >= 1");
    if (interval.has_value() && !schedule.empty()) {
        throw InputError("interval: mutually exclusive with schedule");
    }
    if (!interval.has_value() && schedule.empty()) {
        throw InputError("interval: either interval or schedule is required");
    }
    if (interval.has_value() && *interval < 1) throw InputError("interval: must be >= 1");
    if (reps < 1) throw InputError("reps: must be >= 1");
    if (checkpoints.empty()) throw InputError("checkpoints: must be nonempty");
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        if (checkpoints[i] < 1 || checkpoints[i] > horizon) {
            throw InputError("checkpoints: entries must lie in [1, horizon]");
        }
        if (i > 0 && checkpoints[i] <= checkpoints[i - 1]) {
            throw InputError("checkpoints: must be strictly increasing");
        }
    }
    if (!(mle_tol > 0.0)) throw InputError("mle_tol: must be > 0");
    estimator.validate();
    if (!schedule.empty()) {
        BatchSchedule validated(schedule); // checks ordering and t1 >= 2
        (void)validated;
    }
}

BatchSchedule ExperimentConfig::make_schedule() const {
    if (interval.has_value()) return BatchSchedule::uniform(*interval, horizon);
    std::vector<int64_t> times;
    for (int64_t t : schedule) {
        if (t <= horizon) times.push_back(t);
    }
    BatchSchedule s;
    if (!times.empty()) s = BatchSchedule(std::move(times));
    return s;
}

uint64_t fnv1a_hash(std::span<const double> values) {
    uint64_t h = 1469598103934665603ULL;
    for (double v : values) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

namespace {

RunRecord execute_run(const ExperimentConfig& config, const BatchSchedule& schedule,
                      const EstimatorFn& estimator, double mu, int64_t rep) {
    RunRecord rec;
    rec.mu = mu;
    rec.rep = rep;
    rec.seed = derive_run_seed(config.base_seed, mu, static_cast<uint64_t>(rep));
    const std::vector<double> stream =
        sample_mixture(mu, static_cast<std::size_t>(config.horizon), rec.seed);
    rec.stream_hash = fnv1a_hash(stream);
    const TestOutcome outcome =
        run_eprocess(stream, schedule, estimator, config.mle_tol, config.alpha);
    rec.tau = outcome.rejection_time;
    rec.final_log_r = outcome.final_log_r;
    rec.trace = outcome.trace;
    return rec;
}

SummaryTable summarize(const ExperimentConfig& config, std::span<const RunRecord> runs) {
    SummaryTable table;
    table.config = config;
    for (std::size_t mi = 0; mi < config.mu_values.size(); ++mi) {
        const double mu = config.mu_values[mi];
        std::vector<int64_t> taus;
        for (const RunRecord& r : runs) {
            if (r.mu == mu && r.tau.has_value()) taus.push_back(*r.tau);
        }
        std::sort(taus.begin(), taus.end());
        double mean_tau = std::numeric_limits<double>::quiet_NaN();
        double median_tau = std::numeric_limits<double>::quiet_NaN();
        if (!taus.empty()) {
            double s = 0.0;
            for (int64_t t : taus) s += static_cast<double>(t);
            mean_tau = s / static_cast<double>(taus.size());
            const std::size_t n = taus.size();
            median_tau = (n % 2 == 1)
                             ? static_cast<double>(taus[n / 2])
                             : 0.5 * static_cast<double>(taus[n / 2 - 1] + taus[n / 2]);
        }
        for (int64_t cp : config.checkpoints) {
            SummaryRow row;
            row.mu = mu;
            row.checkpoint = cp;
            row.n_reps = config.reps;
            int64_t count = 0;
            for (int64_t t : taus) {
                if (t <= cp) ++count;
            }
            row.rejection_fraction =
                static_cast<double>(count) / static_cast<double>(config.reps);
            row.mean_tau = mean_tau;
            row.median_tau = median_tau;
            table.rows.push_back(row);
        }
    }
    return table;
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, int threads) {
    config.validate();
    const BatchSchedule schedule = config.make_schedule();
    const EstimatorFn estimator = make_estimator_fn(config.estimator);

    const std::size_t n_tasks = config.mu_values.size() * static_cast<std::size_t>(config.reps);
    std::vector<RunRecord> runs(n_tasks);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= n_tasks) return;
            const std::size_t mi = idx / static_cast<std::size_t>(config.reps);
            const int64_t rep = static_cast<int64_t>(idx % static_cast<std::size_t>(config.reps));
            const double mu = config.mu_values[mi];
            try {
                runs[idx] = execute_run(config, schedule, estimator, mu, rep);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) {
                    std::ostringstream os;
                    os << "run failed (mu=" << mu << ", rep=" << rep << ", seed="
                       << derive_run_seed(config.base_seed, mu, static_cast<uint64_t>(rep))
                       << "): " << e.what();
                    first_error = std::make_exception_ptr(NumericError(os.str()));
                }
                failed.store(true);
            }
        }
    };

    int n_threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (n_threads < 1) n_threads = 1;
    if (static_cast<std::size_t>(n_threads) > n_tasks) n_threads = static_cast<int>(n_tasks);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    ExperimentResult result;
    result.summary = summarize(config, runs);
    result.runs = std::move(runs);
    return result;
}

std::vector<ExperimentResult> compare_estimators(const ExperimentConfig& config,
                                                 std::span<const EstimatorSpec> estimators,
                                                 int threads) {
    if (estimators.empty()) throw InputError("compare_estimators: no estimators given");
    std::vector<ExperimentResult> results;
    results.reserve(estimators.size());
    for (const EstimatorSpec& spec : estimators) {
        ExperimentConfig arm = config;
        arm.estimator = spec;
        results.push_back(run_experiment(arm, threads));
    }
    // common-random-number discipline: identical streams across arms
    for (std::size_t a = 1; a < results.size(); ++a) {
        for (std::size_t i = 0; i < results[a].runs.size(); ++i) {
            if (results[a].runs[i].stream_hash != results[0].runs[i].stream_hash) {
                throw NumericError("compare_estimators: stream hashes diverged across arms");
            }
        }
    }
    return results;
}

std::vector<ExperimentResult> batching_study(const ExperimentConfig& config,
                                             std::span<const int64_t> intervals, int threads) {
    if (intervals.empty()) throw InputError("batching_study: no intervals given");
    std::vector<ExperimentResult> results;
    results.reserve(intervals.size());
    for (int64_t interval : intervals) {
        ExperimentConfig arm = config;
        arm.schedule.clear();
        arm.interval = interval;
        results.push_back(run_experiment(arm, threads));
    }
    for (std::size_t a = 1; a < results.size(); ++a) {
        for (std::size_t i = 0; i < results[a].runs.size(); ++i) {
            if (results[a].runs[i].stream_hash != results[0].runs[i].stream_hash) {
                throw NumericError("batching_study: stream hashes diverged across arms");
            }
        }
    }
    return results;
}

std::string format_double(double x) {
    if (x == 0.0) return "0"; // canonicalize signed zero
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
}

void write_summary_csv(std::ostream& os, const SummaryTable& table) {
    os << "mu,checkpoint,rejection_fraction,n_reps,mean_tau,median_tau\n";
    for (const SummaryRow& row : table.rows) {
        os << format_double(row.mu) << ',' << row.checkpoint << ','
           << format_double(row.rejection_fraction) << ',' << row.n_reps << ','
           << format_double(row.mean_tau) << ',' << format_double(row.median_tau) << '\n';
    }
}

void write_runs_csv(std::ostream& os, std::span<const RunRecord> runs) {
    os << "mu,rep,seed,tau,final_log_r\n";
    for (const RunRecord& r : runs) {
        os << format_double(r.mu) << ',' << r.rep << ',' << r.seed << ',';
        if (r.tau.has_value()) os << *r.tau;
        os << ',' << format_double(r.final_log_r) << '\n';
    }
}

} // namespace lcseq
