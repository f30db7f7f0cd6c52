#include "lcseq/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "lcseq/errors.hpp"
#include "lcseq/mixture.hpp"
#include "lcseq/rng.hpp"

namespace lcseq {

namespace {
constexpr double kLogSqrt2Pi = 0.9189385332046727417803297;

double sample_sd(std::span<const double> data) {
    const std::size_t n = data.size();
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (double v : data) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : data) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(n - 1));
}

// linearly interpolated order statistic at probability p
double quantile_sorted(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double pos = p * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= n) return sorted.back();
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

double normal_logpdf(double x, double mean, double var) {
    const double d = x - mean;
    return -kLogSqrt2Pi - 0.5 * std::log(var) - 0.5 * d * d / var;
}
} // namespace

void EstimatorSpec::validate() const {
    if (bandwidth_rule == BandwidthRule::fixed && !(fixed_bandwidth > 0.0)) {
        throw InputError("estimator.bandwidth: fixed bandwidth must be > 0");
    }
    if (gmm_max_iter < 1) throw InputError("estimator.max_iter: must be >= 1");
    if (!(gmm_tol > 0.0)) throw InputError("estimator.tol: must be > 0");
    if (gmm_restarts < 1) throw InputError("estimator.restarts: must be >= 1");
    if (variant == EstimatorVariant::oracle &&
        (!(oracle_mu >= 0.0) || !std::isfinite(oracle_mu))) {
        throw InputError("estimator.mu: oracle mu must be finite and nonnegative");
    }
}

double silverman_bandwidth(std::span<const double> data) {
    std::vector<double> sorted(data.begin(), data.end());
    std::sort(sorted.begin(), sorted.end());
    const double sd = sample_sd(data);
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    const double sigma = std::min(sd, iqr / 1.34);
    if (!(sigma > 0.0)) return 0.0; // caller falls back
    return 1.06 * sigma * std::pow(static_cast<double>(data.size()), -0.2);
}

KdeDensity::KdeDensity(std::vector<double> centers, double bandwidth, bool bandwidth_fallback)
    : centers_(std::move(centers)), h_(bandwidth), fallback_(bandwidth_fallback) {
    if (centers_.empty()) throw InputError("kde: empty prefix");
    if (!(h_ > 0.0)) throw InputError("kde: bandwidth must be > 0");
    log_norm_ = -std::log(static_cast<double>(centers_.size())) - std::log(h_) - kLogSqrt2Pi;
}

double KdeDensity::logpdf(double x) const {
    // log-sum-exp over the kernels, pivoted at the nearest center
    double best = -std::numeric_limits<double>::infinity();
    for (double c : centers_) {
        const double z = (x - c) / h_;
        best = std::max(best, -0.5 * z * z);
    }
    double sum = 0.0;
    for (double c : centers_) {
        const double z = (x - c) / h_;
        sum += std::exp(-0.5 * z * z - best);
    }
    return log_norm_ + best + std::log(sum);
}

KdeDensity kde_fit(std::span<const double> prefix, const EstimatorSpec& spec) {
    if (prefix.empty()) throw InputError("kde_fit: empty prefix");
    for (double v : prefix) {
        if (!std::isfinite(v)) throw InputError("kde_fit: non-finite value in prefix");
    }
    double h;
    bool fallback = false;
    if (spec.bandwidth_rule == BandwidthRule::fixed) {
        h = spec.fixed_bandwidth;
    } else {
        h = silverman_bandwidth(prefix);
        if (!(h > 0.0)) {
            h = 1.0;
            fallback = true;
        }
    }
    return KdeDensity(std::vector<double>(prefix.begin(), prefix.end()), h, fallback);
}

double Gmm2Density::logpdf(double x) const {
    const double a = std::log(p_.weights[0]) + normal_logpdf(x, p_.means[0], p_.variances[0]);
    const double b = std::log(p_.weights[1]) + normal_logpdf(x, p_.means[1], p_.variances[1]);
    return logaddexp(a, b);
}

namespace {

double gmm2_loglik(std::span<const double> data, const Gmm2Params& p) {
    double total = 0.0;
    for (double x : data) {
        const double a = std::log(p.weights[0]) + normal_logpdf(x, p.means[0], p.variances[0]);
        const double b = std::log(p.weights[1]) + normal_logpdf(x, p.means[1], p.variances[1]);
        total += logaddexp(a, b);
    }
    return total;
}

Gmm2Fit run_em(std::span<const double> data, Gmm2Params p, int max_iter, double tol) {
    const std::size_t n = data.size();
    std::vector<double> resp(n); // responsibility of component 0
    Gmm2Fit fit;
    double prev = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        const double ll = gmm2_loglik(data, p);
        fit.loglik_path.push_back(ll);
        fit.iterations = it + 1;
        if (it > 0 && std::abs(ll - prev) <= tol * (1.0 + std::abs(ll))) {
            prev = ll;
            break;
        }
        prev = ll;

        for (std::size_t i = 0; i < n; ++i) {
            const double a =
                std::log(p.weights[0]) + normal_logpdf(data[i], p.means[0], p.variances[0]);
            const double b =
                std::log(p.weights[1]) + normal_logpdf(data[i], p.means[1], p.variances[1]);
            resp[i] = std::exp(a - logaddexp(a, b));
        }
        double n0 = 0.0, sum0 = 0.0, sum1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            n0 += resp[i];
            sum0 += resp[i] * data[i];
            sum1 += (1.0 - resp[i]) * data[i];
        }
        const double n1 = static_cast<double>(n) - n0;
        // guard empty components before dividing
        if (n0 < 1e-10 || n1 < 1e-10) break;
        p.means[0] = sum0 / n0;
        p.means[1] = sum1 / n1;
        double v0 = 0.0, v1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            v0 += resp[i] * (data[i] - p.means[0]) * (data[i] - p.means[0]);
            v1 += (1.0 - resp[i]) * (data[i] - p.means[1]) * (data[i] - p.means[1]);
        }
        p.variances[0] = std::max(v0 / n0, Gmm2Params::variance_floor);
        p.variances[1] = std::max(v1 / n1, Gmm2Params::variance_floor);
        p.weights[0] = n0 / static_cast<double>(n);
        p.weights[1] = n1 / static_cast<double>(n);
    }
    fit.params = p;
    fit.loglik = prev;
    return fit;
}

} // namespace

Gmm2Fit gmm2_fit(std::span<const double> prefix, const EstimatorSpec& spec) {
    if (prefix.size() < 4) throw InputError("gmm2_fit: need a prefix of at least 4 points");
    for (double v : prefix) {
        if (!std::isfinite(v)) throw InputError("gmm2_fit: non-finite value in prefix");
    }
    std::vector<double> sorted(prefix.begin(), prefix.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) {
        throw DegenerateSampleError("gmm2_fit: all points identical");
    }

    // median split: component means/variances from the two halves
    const std::size_t half = sorted.size() / 2;
    auto moments = [](std::span<const double> xs) {
        double mean = 0.0;
        for (double v : xs) mean += v;
        mean /= static_cast<double>(xs.size());
        double var = 0.0;
        for (double v : xs) var += (v - mean) * (v - mean);
        var /= static_cast<double>(xs.size());
        return std::pair<double, double>(mean, std::max(var, Gmm2Params::variance_floor));
    };
    const auto [m_lo, v_lo] = moments(std::span<const double>(sorted).subspan(0, half));
    const auto [m_hi, v_hi] = moments(std::span<const double>(sorted).subspan(half));
    const double sd_all = sample_sd(prefix);

    Gmm2Params init;
    init.weights[0] = init.weights[1] = 0.5;
    init.means[0] = m_lo;
    init.means[1] = m_hi;
    init.variances[0] = v_lo;
    init.variances[1] = v_hi;

    Gmm2Fit best;
    best.loglik = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < spec.gmm_restarts; ++r) {
        Gmm2Params start = init;
        if (r > 0) { // deterministic first try, seeded jitter after
            SplitMix64 rng(static_cast<uint64_t>(r));
            start.means[0] += (rng.next_double() - 0.5) * sd_all;
            start.means[1] += (rng.next_double() - 0.5) * sd_all;
        }
        Gmm2Fit fit = run_em(prefix, start, spec.gmm_max_iter, spec.gmm_tol);
        if (fit.loglik > best.loglik) best = std::move(fit);
    }
    return best;
}

DensityPtr oracle_density(double mu) { return std::make_shared<GaussianMixture1D>(mu); }

FittedEstimator fit_estimator(std::span<const double> prefix, const EstimatorSpec& spec) {
    spec.validate();
    FittedEstimator out;
    switch (spec.variant) {
        case EstimatorVariant::oracle:
            out.density = oracle_density(spec.oracle_mu);
            return out;
        case EstimatorVariant::kde: {
            KdeDensity kde = kde_fit(prefix, spec);
            out.fallback = kde.bandwidth_fallback();
            out.density = std::make_shared<KdeDensity>(std::move(kde));
            return out;
        }
        case EstimatorVariant::gmm2: {
            const bool all_equal =
                !prefix.empty() &&
                std::all_of(prefix.begin(), prefix.end(),
                            [&](double v) { return v == prefix.front(); });
            if (prefix.size() < 4 || all_equal) {
                KdeDensity kde = kde_fit(prefix, spec);
                out.fallback = true;
                out.density = std::make_shared<KdeDensity>(std::move(kde));
                return out;
            }
            Gmm2Fit fit = gmm2_fit(prefix, spec);
            out.density = std::make_shared<Gmm2Density>(fit.params);
            return out;
        }
    }
    throw InputError("estimator.variant: unknown variant");
}

} // namespace lcseq
