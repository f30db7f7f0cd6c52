#include "lcseq/eprocess.hpp"

#include <algorithm>
#include <cmath>

#include "lcseq/errors.hpp"

namespace lcseq {

BatchSchedule::BatchSchedule(std::vector<int64_t> ts) : times(std::move(ts)) {
    if (times.empty()) throw InputError("schedule: must contain at least one time");
    if (times.front() < kDimension + 1) {
        throw InputError("schedule: first time must be >= d+1 = 2");
    }
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        if (!(times[i] < times[i + 1])) {
            throw InputError("schedule: times must be strictly increasing");
        }
    }
}

BatchSchedule BatchSchedule::uniform(int64_t interval, int64_t horizon) {
    if (interval < 1) throw InputError("interval: must be >= 1");
    if (horizon < 1) throw InputError("horizon: must be >= 1");
    std::vector<int64_t> times;
    for (int64_t t = std::max<int64_t>(interval, kDimension + 1); t <= horizon; t += interval) {
        times.push_back(t);
    }
    // may be empty when the horizon ends before the first recomputation
    BatchSchedule s;
    s.times = std::move(times);
    return s;
}

EstimatorFn make_estimator_fn(const EstimatorSpec& spec) {
    spec.validate();
    return [spec](std::span<const double> prefix) -> DensityPtr {
        return fit_estimator(prefix, spec).density;
    };
}

namespace {
bool all_equal(std::span<const double> xs) {
    for (double v : xs) {
        if (v != xs.front()) return false;
    }
    return true;
}
} // namespace

EProcessState eprocess_step(EProcessState state, double x, const BatchSchedule& schedule,
                            const EstimatorFn& estimator, double mle_tol) {
    if (!std::isfinite(x)) throw InputError("eprocess_step: observation must be finite");
    state.buffer.push_back(x);
    state.t += 1;

    if (state.next_batch >= schedule.times.size() || state.t != schedule.times[state.next_batch]) {
        return state;
    }

    if (all_equal(state.buffer)) {
        // no log-concave MLE exists yet; hold log R and widen the pending batch
        state.deferred = true;
        state.next_batch += 1;
        state.trace.push_back({state.t, state.log_r});
        return state;
    }

    const auto train =
        std::span<const double>(state.buffer).subspan(0, static_cast<std::size_t>(state.last_boundary));
    const DensityPtr qhat = estimator(train);

    double contribution = 0.0;
    for (int64_t s = state.last_boundary; s < state.t; ++s) {
        const double lq = qhat->logpdf(state.buffer[static_cast<std::size_t>(s)]);
        if (!std::isfinite(lq)) {
            throw NumericError("estimator returned a non-finite log-density in the numerator");
        }
        contribution += lq;
    }
    state.log_numerator += contribution;

    const WeightedSortedSample sample = WeightedSortedSample::from_raw(state.buffer);
    const MleFitReport fit = fit_lcmle(sample, mle_tol);
    state.cumulative_gap += std::max(fit.gap, 0.0);
    state.last_mle_loglik = fit.loglik;
    state.log_r = state.log_numerator - fit.loglik - state.cumulative_gap;

    state.last_boundary = state.t;
    state.next_batch += 1;
    state.trace.push_back({state.t, state.log_r});
    return state;
}

EProcessState eprocess_step(EProcessState state, double x, const BatchSchedule& schedule,
                            const EstimatorSpec& spec, double mle_tol) {
    // track fallback use through the EstimatorSpec dispatch
    bool fallback = false;
    EstimatorFn fn = [&spec, &fallback](std::span<const double> prefix) -> DensityPtr {
        FittedEstimator fe = fit_estimator(prefix, spec);
        fallback = fe.fallback;
        return fe.density;
    };
    EProcessState out = eprocess_step(std::move(state), x, schedule, fn, mle_tol);
    out.estimator_fallback = out.estimator_fallback || fallback;
    return out;
}

std::optional<int64_t> rejection_time(std::span<const TracePoint> trace, double alpha) {
    if (!(alpha > 0.0) || !(alpha <= 1.0)) {
        throw InputError("alpha: must lie in (0, 1]");
    }
    for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
        if (!(trace[i].t < trace[i + 1].t)) {
            throw InputError("trace: times must be increasing");
        }
    }
    const double threshold = -std::log(alpha); // log(1/alpha)
    for (const TracePoint& p : trace) {
        if (p.log_r >= threshold) return p.t;
    }
    return std::nullopt;
}

TestOutcome run_eprocess(std::span<const double> stream, const BatchSchedule& schedule,
                         const EstimatorFn& estimator, double mle_tol, double alpha,
                         EProcessState* final_state) {
    EProcessState state;
    for (double x : stream) {
        state = eprocess_step(std::move(state), x, schedule, estimator, mle_tol);
    }
    TestOutcome outcome;
    outcome.rejection_time = rejection_time(state.trace, alpha);
    outcome.rejected = outcome.rejection_time.has_value();
    outcome.final_log_r = state.log_r;
    outcome.trace = state.trace;
    if (final_state != nullptr) *final_state = std::move(state);
    return outcome;
}

double sigma_diagnostic(const Density& truth, std::span<const double> buffer, double mle_tol) {
    const WeightedSortedSample sample = WeightedSortedSample::from_raw(buffer);
    double truth_sum = 0.0;
    for (double x : buffer) {
        const double lp = truth.logpdf(x);
        if (!std::isfinite(lp)) {
            throw InputError("sigma_diagnostic: observation outside the truth's support");
        }
        truth_sum += lp;
    }
    const MleFitReport fit = fit_lcmle(sample, mle_tol);
    return truth_sum - fit.loglik;
}

double regret_diagnostic(const Density& truth, std::span<const double> stream,
                         const BatchSchedule& schedule, const EstimatorFn& estimator) {
    if (schedule.times.empty() ||
        static_cast<int64_t>(stream.size()) < schedule.times.front()) {
        throw InputError("regret_diagnostic: stream shorter than the first schedule time");
    }
    double regret = 0.0;
    int64_t boundary = kDimension;
    for (int64_t tk : schedule.times) {
        if (tk > static_cast<int64_t>(stream.size())) break;
        const auto train = stream.subspan(0, static_cast<std::size_t>(boundary));
        const DensityPtr qhat = estimator(train);
        for (int64_t s = boundary; s < tk; ++s) {
            const double x = stream[static_cast<std::size_t>(s)];
            regret += truth.logpdf(x) - qhat->logpdf(x);
        }
        boundary = tk;
    }
    return regret;
}

double regret_diagnostic(const Density& truth, std::span<const double> stream,
                         const BatchSchedule& schedule, const EstimatorSpec& spec) {
    return regret_diagnostic(truth, stream, schedule, make_estimator_fn(spec));
}

} // namespace lcseq
