#pragma once

// Shared helpers for the test and acceptance suites. The grid oracle here is
// intentionally independent of the library's closed-form segment integrals:
// it evaluates the fit objective with its own per-segment Simpson rule.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "lcseq/density.hpp"
#include "lcseq/lcmle.hpp"

namespace testsupport {

class NormalDensity : public lcseq::Density {
public:
    NormalDensity(double mean, double sd) : mean_(mean), sd_(sd) {}
    double logpdf(double x) const override {
        const double z = (x - mean_) / sd_;
        return -0.918938533204672742 - std::log(sd_) - 0.5 * z * z;
    }

private:
    double mean_, sd_;
};

// two-sample Kolmogorov-Smirnov statistic
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) {
            ++i;
        } else {
            ++j;
        }
        const double fa = static_cast<double>(i) / a.size();
        const double fb = static_cast<double>(j) / b.size();
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

// linearly interpolated order statistic, matching the library's convention
inline double quantile(std::vector<double> sorted, double p) {
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double pos = p * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= n) return sorted.back();
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

// ---- grid oracle for the log-concave MLE, n <= 4 ----
//
// Parametrizes the log-density by its segment slopes (phi_1 pinned at 0; the
// objective is shift-invariant), scans a slope grid restricted to
// nonincreasing slopes, refines around the best point, then polishes each
// slope by golden-section search. Simpson overestimates integrals of
// exp(linear), so the reported objective never exceeds the true optimum.

inline double oracle_segment_integral(double a, double b, double len) {
    const int nodes = 33;
    const double h = len / (nodes - 1);
    double sum = std::exp(a) + std::exp(b);
    for (int i = 1; i + 1 < nodes; ++i) {
        const double u = static_cast<double>(i) / (nodes - 1);
        sum += std::exp(a + (b - a) * u) * (i % 2 == 1 ? 4.0 : 2.0);
    }
    return sum * h / 3.0;
}

// mean log-likelihood of the normalized candidate with the given slopes
inline double oracle_objective(const std::vector<double>& x, const std::vector<double>& wn,
                               const std::vector<double>& slopes) {
    const std::size_t m = x.size();
    std::vector<double> phi(m, 0.0);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        phi[i + 1] = phi[i] + slopes[i] * (x[i + 1] - x[i]);
    }
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        integral += oracle_segment_integral(phi[i], phi[i + 1], x[i + 1] - x[i]);
    }
    if (!(integral > 0.0) || !std::isfinite(integral)) {
        return -std::numeric_limits<double>::infinity();
    }
    double lin = 0.0;
    for (std::size_t i = 0; i < m; ++i) lin += wn[i] * phi[i];
    return lin - std::log(integral);
}

// total log-likelihood found by the oracle (a lower bound on the optimum)
inline double oracle_loglik(const lcseq::WeightedSortedSample& sample) {
    const std::vector<double>& x = sample.positions;
    const std::size_t m = x.size();
    const double total = sample.total_weight();
    std::vector<double> wn(m);
    for (std::size_t i = 0; i < m; ++i) wn[i] = sample.weights[i] / total;

    const std::size_t dims = m - 1;
    const double range = x.back() - x.front();
    double span = 50.0 / range;
    std::vector<double> best(dims, 0.0);
    std::vector<double> center(dims, 0.0);
    double best_val = oracle_objective(x, wn, best);

    const int rounds = 6;
    const int pts = 13;
    for (int round = 0; round < rounds; ++round) {
        std::vector<int> idx(dims, 0);
        std::vector<double> cand(dims);
        while (true) {
            bool feasible = true;
            for (std::size_t d = 0; d < dims; ++d) {
                cand[d] = center[d] + span * (2.0 * idx[d] / (pts - 1) - 1.0);
                if (d > 0 && cand[d] > cand[d - 1]) feasible = false;
            }
            if (feasible) {
                const double val = oracle_objective(x, wn, cand);
                if (val > best_val) {
                    best_val = val;
                    best = cand;
                }
            }
            std::size_t d = 0;
            while (d < dims && ++idx[d] == pts) {
                idx[d] = 0;
                ++d;
            }
            if (d == dims) break;
        }
        center = best;
        span /= 4.0;
    }

    // golden-section polish per slope, holding the monotone order
    const double gr = 0.6180339887498949;
    for (int sweep = 0; sweep < 30; ++sweep) {
        for (std::size_t d = 0; d < dims; ++d) {
            double lo = best[d] - span * 4.0;
            double hi = best[d] + span * 4.0;
            if (d > 0) hi = std::min(hi, best[d - 1]);
            if (d + 1 < dims) lo = std::max(lo, best[d + 1]);
            if (!(lo < hi)) continue;
            double a = hi - gr * (hi - lo);
            double b = lo + gr * (hi - lo);
            std::vector<double> cand = best;
            for (int it = 0; it < 40; ++it) {
                cand[d] = a;
                const double fa = oracle_objective(x, wn, cand);
                cand[d] = b;
                const double fb = oracle_objective(x, wn, cand);
                if (fa > fb) {
                    hi = b;
                    b = a;
                    a = hi - gr * (hi - lo);
                } else {
                    lo = a;
                    a = b;
                    b = lo + gr * (hi - lo);
                }
            }
            cand[d] = 0.5 * (lo + hi);
            const double val = oracle_objective(x, wn, cand);
            if (val > best_val) {
                best_val = val;
                best = cand;
            }
        }
    }
    return best_val * total;
}

} // namespace testsupport
