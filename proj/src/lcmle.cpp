#include "lcseq/lcmle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lcseq/errors.hpp"

namespace lcseq {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPhiClamp = 600.0; // keeps exp() of intermediate iterates finite

// Per-segment integrals of exp(a + (b-a)u), u in [0,1], scaled by length L:
//   i0 = integral e,  iL = integral (1-u) e,  iR = integral u e,
//   iLL = integral (1-u)^2 e,  iRR = integral u^2 e,  iLR = integral u(1-u) e.
// The larger endpoint is factored out so the moment argument is <= 0.
struct SegmentMoments {
    double i0, iL, iR, iLL, iRR, iLR;
};

SegmentMoments segment_moments(double a, double b, double L) {
    SegmentMoments s;
    if (b >= a) {
        const double d = a - b;
        const double e0 = expmom0(d), e1 = expmom1(d), e2 = expmom2(d);
        const double f = L * std::exp(b);
        s.i0 = f * e0;
        s.iR = f * (e0 - e1); // u = 1 - v
        s.iL = f * e1;
        s.iRR = f * (e0 - 2.0 * e1 + e2);
        s.iLL = f * e2;
        s.iLR = f * (e1 - e2);
    } else {
        const double d = b - a;
        const double e0 = expmom0(d), e1 = expmom1(d), e2 = expmom2(d);
        const double f = L * std::exp(a);
        s.i0 = f * e0;
        s.iR = f * e1;
        s.iL = f * (e0 - e1);
        s.iRR = f * e2;
        s.iLL = f * (e0 - 2.0 * e1 + e2);
        s.iLR = f * (e1 - e2);
    }
    return s;
}

// Thomas algorithm; returns false on a non-positive pivot.
bool solve_tridiag(std::vector<double> diag, std::vector<double> sub, std::vector<double> sup,
                   std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        if (!(diag[i - 1] > 0.0) || !std::isfinite(diag[i - 1])) return false;
        const double w = sub[i - 1] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    if (!(diag[n - 1] > 0.0) || !std::isfinite(diag[n - 1])) return false;
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
    }
    return true;
}

struct Problem {
    std::vector<double> x;  // knots (data positions)
    std::vector<double> wn; // weights normalized to sum 1
    std::vector<double> h;  // gaps
    double total_weight = 0.0;
};

// Interpolate kink values onto the full knot grid.
std::vector<double> interpolate_full(const Problem& pb, const std::vector<int>& S,
                                     const std::vector<double>& psi) {
    std::vector<double> phi(pb.x.size());
    for (std::size_t k = 0; k + 1 < S.size(); ++k) {
        const int a = S[k], b = S[k + 1];
        phi[a] = psi[k];
        phi[b] = psi[k + 1];
        const double xa = pb.x[a], xb = pb.x[b];
        for (int i = a + 1; i < b; ++i) {
            const double t = (pb.x[i] - xa) / (xb - xa);
            phi[i] = (1.0 - t) * psi[k] + t * psi[k + 1];
        }
    }
    return phi;
}

// Hat-weighted data sums at the kinks (constant for a fixed kink set).
std::vector<double> kink_weights(const Problem& pb, const std::vector<int>& S) {
    std::vector<double> wS(S.size(), 0.0);
    for (std::size_t k = 0; k < S.size(); ++k) wS[k] = pb.wn[S[k]];
    for (std::size_t k = 0; k + 1 < S.size(); ++k) {
        const int a = S[k], b = S[k + 1];
        const double xa = pb.x[a], xb = pb.x[b];
        for (int i = a + 1; i < b; ++i) {
            const double t = (pb.x[i] - xa) / (xb - xa);
            wS[k] += pb.wn[i] * (1.0 - t);
            wS[k + 1] += pb.wn[i] * t;
        }
    }
    return wS;
}

double reduced_objective(const Problem& pb, const std::vector<int>& S,
                         const std::vector<double>& wS, const std::vector<double>& psi) {
    double lin = 0.0, integral = 0.0;
    for (std::size_t k = 0; k < S.size(); ++k) lin += wS[k] * psi[k];
    for (std::size_t k = 0; k + 1 < S.size(); ++k) {
        const double L = pb.x[S[k + 1]] - pb.x[S[k]];
        integral += segment_moments(psi[k], psi[k + 1], L).i0;
    }
    return lin - integral;
}

// Damped Newton on the reduced (kink-value) problem; strictly concave, so the
// Gram system is SPD tridiagonal. Returns the reduced optimum in psi.
void inner_newton(const Problem& pb, const std::vector<int>& S, const std::vector<double>& wS,
                  std::vector<double>& psi) {
    const std::size_t q = S.size();
    std::vector<double> grad(q), diag(q), sub(q > 1 ? q - 1 : 0), step;
    double fval = reduced_objective(pb, S, wS, psi);
    double prev_gnorm = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 200; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        std::fill(diag.begin(), diag.end(), 0.0);
        std::fill(sub.begin(), sub.end(), 0.0);
        for (std::size_t k = 0; k + 1 < q; ++k) {
            const double L = pb.x[S[k + 1]] - pb.x[S[k]];
            const SegmentMoments m = segment_moments(psi[k], psi[k + 1], L);
            grad[k] += m.iL;
            grad[k + 1] += m.iR;
            diag[k] += m.iLL;
            diag[k + 1] += m.iRR;
            sub[k] += m.iLR;
        }
        double gnorm = 0.0;
        double dmax = 0.0;
        for (std::size_t k = 0; k < q; ++k) {
            grad[k] = wS[k] - grad[k];
            gnorm = std::max(gnorm, std::abs(grad[k]));
            dmax = std::max(dmax, diag[k]);
        }
        if (gnorm <= 5e-15) break;
        // small ridge keeps the Gram solve stable when a segment carries no mass
        const double ridge = std::max(1e-13 * dmax, 1e-280);
        for (std::size_t k = 0; k < q; ++k) diag[k] += ridge;

        // local phase: objective differences sit below rounding long before the
        // gradient does, so take plain Newton steps without a line search
        if (gnorm <= 1e-6) {
            step = grad;
            if (!solve_tridiag(diag, sub, sub, step)) break;
            if (gnorm > 0.9 * prev_gnorm && it > 0) break; // noise floor reached
            prev_gnorm = gnorm;
            for (std::size_t k = 0; k < q; ++k) {
                psi[k] = std::clamp(psi[k] + step[k], -kPhiClamp, kPhiClamp);
            }
            continue;
        }

        auto try_direction = [&](const std::vector<double>& dir) {
            double dir_deriv = 0.0;
            for (std::size_t k = 0; k < q; ++k) dir_deriv += grad[k] * dir[k];
            if (!(dir_deriv > 0.0)) return false;
            double t = 1.0;
            double mags = 0.0;
            for (double s : dir) mags = std::max(mags, std::abs(s));
            if (mags > kPhiClamp) t = kPhiClamp / mags;
            std::vector<double> trial(q);
            for (int ls = 0; ls < 60; ++ls) {
                for (std::size_t k = 0; k < q; ++k) {
                    trial[k] = std::clamp(psi[k] + t * dir[k], -kPhiClamp, kPhiClamp);
                }
                const double ftrial = reduced_objective(pb, S, wS, trial);
                if (ftrial > fval || (ftrial == fval && ls == 0)) {
                    psi = trial;
                    const bool moved = ftrial > fval;
                    fval = ftrial;
                    return moved;
                }
                t *= 0.5;
            }
            return false;
        };

        step = grad;
        bool moved = solve_tridiag(diag, sub, sub, step) && try_direction(step);
        if (!moved) {
            // scaled gradient retry before giving up
            std::vector<double> gdir(q);
            for (std::size_t k = 0; k < q; ++k) gdir[k] = grad[k] / (dmax + ridge);
            moved = try_direction(gdir);
        }
        if (!moved) break; // numerically stuck; outer certificate stays honest
    }
}

// Concavity slack at each interior knot: c_j = slope_left - slope_right >= 0.
std::vector<double> concavity_slack(const Problem& pb, const std::vector<double>& phi) {
    const std::size_t m = pb.x.size();
    std::vector<double> c(m, 0.0);
    for (std::size_t j = 1; j + 1 < m; ++j) {
        const double sl = (phi[j] - phi[j - 1]) / pb.h[j - 1];
        const double sr = (phi[j + 1] - phi[j]) / pb.h[j];
        c[j] = sl - sr;
    }
    return c;
}

// Pool-adjacent-violators projection of the slopes onto the nonincreasing
// cone, weighted by segment lengths so pooled stretches keep their total rise.
// Removes the tiny convex kinks the tolerance-based loop can leave behind.
void project_concave(const Problem& pb, std::vector<double>& phi) {
    const std::size_t m = phi.size();
    if (m < 3) return;
    std::vector<double> slopes(m - 1);
    bool violated = false;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        slopes[i] = (phi[i + 1] - phi[i]) / pb.h[i];
        if (i > 0 && slopes[i] > slopes[i - 1]) violated = true;
    }
    if (!violated) return;
    struct Pool {
        double value, weight;
        int count;
    };
    std::vector<Pool> stack;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        Pool pool{slopes[i], pb.h[i], 1};
        while (!stack.empty() && stack.back().value < pool.value) {
            const Pool& top = stack.back();
            pool.value = (pool.value * pool.weight + top.value * top.weight) /
                         (pool.weight + top.weight);
            pool.weight += top.weight;
            pool.count += top.count;
            stack.pop_back();
        }
        stack.push_back(pool);
    }
    std::size_t idx = 0;
    for (const Pool& pool : stack) {
        for (int k = 0; k < pool.count; ++k, ++idx) {
            phi[idx + 1] = phi[idx] + pool.value * pb.h[idx];
        }
    }
}

struct Certificate {
    double gap_mean = std::numeric_limits<double>::infinity();
    double min_active_nu = std::numeric_limits<double>::infinity();
    int release_index = -1; // most negative multiplier, if any
};

// First-order optimality gap. Writing g for the objective gradient at phi and
// s(psi) for segment slopes, double Abel summation gives, for any candidate
// psi on the same knots,
//   g . psi = G_last psi_last - T_last s_last(psi) + sum_i T_i (s_{i+1} - s_i)(psi)
// with G the cumulative sum of g and T the h-weighted cumulative sum of G.
// The T_i are exactly the KKT multipliers of the concavity constraints, and
// concave candidates have s_{i+1} - s_i <= 0, so
//   F(phi*) - F(phi) <= g.(phi* - phi)
//     <= |G_last| M + |T_last| S + max(-T)_+ 2S - g.phi
// with M a box bound on |phi*| and S one on its slopes.
Certificate compute_certificate(const Problem& pb, const std::vector<int>& S,
                                const std::vector<double>& phi) {
    const std::size_t m = pb.x.size();
    std::vector<double> cbar(m, 0.0);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const SegmentMoments mom = segment_moments(phi[i], phi[i + 1], pb.h[i]);
        cbar[i] += mom.iL;
        cbar[i + 1] += mom.iR;
    }
    std::vector<double> gfull(m);
    for (std::size_t i = 0; i < m; ++i) gfull[i] = pb.wn[i] - cbar[i];

    // G_i = sum_{k<=i} g_k; T_i = sum_{k<=i} G_k h_k; nu at knot j is T_{j-1}
    std::vector<double> bigG(m), bigT(m - 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        acc += gfull[i];
        bigG[i] = acc;
    }
    acc = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        acc += bigG[i] * pb.h[i];
        bigT[i] = acc;
    }

    std::vector<char> in_S(m, 0);
    for (int s : S) in_S[s] = 1;
    Certificate cert;
    cert.min_active_nu = std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j + 1 < m; ++j) {
        if (in_S[j]) continue;
        const double nu = bigT[j - 1];
        if (nu < cert.min_active_nu) {
            cert.min_active_nu = nu;
            cert.release_index = static_cast<int>(j);
        }
    }

    double max_neg_t = 0.0;
    for (std::size_t i = 0; i + 2 < m; ++i) max_neg_t = std::max(max_neg_t, -bigT[i]);
    double gdotphi = 0.0;
    for (std::size_t i = 0; i < m; ++i) gdotphi += gfull[i] * phi[i];

    double phimax = 0.0, slopemax = 0.0;
    for (double v : phi) phimax = std::max(phimax, std::abs(v));
    for (std::size_t i = 0; i + 1 < m; ++i) {
        slopemax = std::max(slopemax, std::abs((phi[i + 1] - phi[i]) / pb.h[i]));
    }
    const double range = pb.x.back() - pb.x.front();
    // box bounds for the optimum's values and slopes near the fitted ones
    const double box_m = 10.0 + 2.0 * (phimax + std::abs(std::log(range)));
    const double box_s = 10.0 / range + 2.0 * slopemax + 1.0;
    cert.gap_mean = std::abs(bigG[m - 1]) * box_m + std::abs(bigT[m - 2]) * box_s +
                    2.0 * max_neg_t * box_s - gdotphi;
    return cert;
}

} // namespace

WeightedSortedSample WeightedSortedSample::from_raw(std::span<const double> values) {
    std::vector<double> sorted;
    sorted.reserve(values.size());
    for (double v : values) {
        if (!std::isfinite(v)) throw InputError("sample contains a non-finite value");
        sorted.push_back(v);
    }
    std::sort(sorted.begin(), sorted.end());
    WeightedSortedSample s;
    for (double v : sorted) {
        if (!s.positions.empty() && v == s.positions.back()) {
            s.weights.back() += 1.0;
        } else {
            s.positions.push_back(v);
            s.weights.push_back(1.0);
        }
    }
    if (s.positions.size() < 2) {
        throw DegenerateSampleError("need at least 2 distinct sample values");
    }
    return s;
}

double WeightedSortedSample::total_weight() const {
    return std::accumulate(weights.begin(), weights.end(), 0.0);
}

double WeightedSortedSample::mean() const {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        num += weights[i] * positions[i];
        den += weights[i];
    }
    return num / den;
}

double loglik(const PiecewiseLogLinear& density, const WeightedSortedSample& sample) {
    double total = 0.0;
    for (std::size_t i = 0; i < sample.positions.size(); ++i) {
        const double lp = density.logpdf(sample.positions[i]);
        if (lp == kNegInf) return kNegInf;
        total += sample.weights[i] * lp;
    }
    return total;
}

MleFitReport fit_lcmle(const WeightedSortedSample& sample, double tol, int max_iter) {
    if (!(tol > 0.0)) throw InputError("fit_lcmle: tol must be positive");
    if (max_iter < 1) throw InputError("fit_lcmle: max_iter must be positive");
    const std::size_t m = sample.positions.size();
    if (m < 2) throw DegenerateSampleError("fit_lcmle: need at least 2 distinct positions");
    if (sample.weights.size() != m) throw InputError("fit_lcmle: positions/weights mismatch");

    Problem pb;
    pb.x = sample.positions;
    pb.h.resize(m - 1);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        if (!(pb.x[i] < pb.x[i + 1])) {
            throw InputError("fit_lcmle: positions must be strictly increasing");
        }
        pb.h[i] = pb.x[i + 1] - pb.x[i];
    }
    pb.total_weight = sample.total_weight();
    pb.wn.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (!(sample.weights[i] > 0.0)) throw InputError("fit_lcmle: weights must be positive");
        pb.wn[i] = sample.weights[i] / pb.total_weight;
    }

    std::vector<int> S = {0, static_cast<int>(m - 1)};
    std::vector<double> phi(m, -std::log(pb.x.back() - pb.x.front())); // uniform start
    Certificate cert;
    int iterations = 0;
    bool kkt = false;
    int last_released = -1;

    while (iterations < max_iter) {
        ++iterations;
        std::vector<double> wS = kink_weights(pb, S);
        std::vector<double> psi(S.size());
        for (std::size_t k = 0; k < S.size(); ++k) psi[k] = phi[S[k]];
        inner_newton(pb, S, wS, psi);
        std::vector<double> cand = interpolate_full(pb, S, psi);

        // feasibility across the current kinks; ratio test on the blockers
        const std::vector<double> c_prev = concavity_slack(pb, phi);
        const std::vector<double> c_cand = concavity_slack(pb, cand);
        double tau = 1.0;
        std::vector<std::pair<int, double>> blockers; // (kink index, blocking tau)
        for (std::size_t k = 1; k + 1 < S.size(); ++k) {
            const int j = S[k];
            const double scale =
                1.0 + std::abs(phi[j] - phi[j - 1]) / pb.h[j - 1] + std::abs(cand[j]);
            if (c_cand[j] < -1e-12 * scale) {
                const double prev = std::max(c_prev[j], 0.0);
                const double tj = prev / (prev - c_cand[j]);
                blockers.emplace_back(j, tj);
                if (tj < tau) tau = tj;
            }
        }

        if (!blockers.empty()) {
            for (std::size_t i = 0; i < m; ++i) phi[i] += tau * (cand[i] - phi[i]);
            // activate every constraint that hit its bound at tau
            std::vector<int> drop;
            for (const auto& [j, tj] : blockers) {
                if (tj <= tau * (1.0 + 1e-9) + 1e-15) drop.push_back(j);
            }
            std::vector<int> keep;
            for (int j : S) {
                if (std::find(drop.begin(), drop.end(), j) == drop.end()) keep.push_back(j);
            }
            S = std::move(keep);
            phi = interpolate_full(pb, S, [&] {
                std::vector<double> p(S.size());
                for (std::size_t k = 0; k < S.size(); ++k) p[k] = phi[S[k]];
                return p;
            }());
            continue;
        }

        phi = std::move(cand);
        cert = compute_certificate(pb, S, phi);
        if (cert.min_active_nu < -1e-11) {
            if (cert.release_index == last_released && iterations > 1) {
                // would cycle on the same constraint; accept the current point
                kkt = true;
                break;
            }
            last_released = cert.release_index;
            S.insert(std::upper_bound(S.begin(), S.end(), cert.release_index),
                     cert.release_index);
            continue;
        }
        kkt = true;
        break;
    }

    // exact concavity, exact renormalization, then the final certificate
    project_concave(pb, phi);
    PiecewiseLogLinear unnormalized(pb.x, phi);
    const double log_int = unnormalized.log_integral();
    for (double& v : phi) v -= log_int;
    cert = compute_certificate(pb, S, phi);

    MleFitReport report;
    report.density = PiecewiseLogLinear(pb.x, phi);
    double ll = 0.0;
    for (std::size_t i = 0; i < m; ++i) ll += sample.weights[i] * phi[i];
    report.loglik = ll;
    report.iterations = iterations;
    report.gap = std::max(cert.gap_mean, 0.0) * pb.total_weight;
    report.converged = kkt && report.gap <= tol;
    return report;
}

} // namespace lcseq
