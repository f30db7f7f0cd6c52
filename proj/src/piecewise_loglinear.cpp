#include "lcseq/piecewise_loglinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lcseq/errors.hpp"

namespace lcseq {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kSeriesCutoff = 0.5;

// integral_0^1 u^k e^{d u} du via the series sum_j d^j / (j! (k+j+1))
double expmom_series(int k, double d) {
    double term = 1.0 / (k + 1);
    double sum = term;
    double dj = 1.0; // d^j / j!
    for (int j = 1; j <= 40; ++j) {
        dj *= d / j;
        term = dj / (k + j + 1);
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
}
} // namespace

double expmom0(double d) {
    if (std::abs(d) < kSeriesCutoff) return expmom_series(0, d);
    return std::expm1(d) / d;
}

double expmom1(double d) {
    if (std::abs(d) < kSeriesCutoff) return expmom_series(1, d);
    return (std::exp(d) * (d - 1.0) + 1.0) / (d * d);
}

double expmom2(double d) {
    if (std::abs(d) < kSeriesCutoff) return expmom_series(2, d);
    return (std::exp(d) * (d * d - 2.0 * d + 2.0) - 2.0) / (d * d * d);
}

double log_integral_exp_segment(double a, double b, double len) {
    if (!(len >= 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
        throw InputError("log_integral_exp_segment: need finite a, b and len >= 0");
    }
    if (len == 0.0) return kNegInf;
    // factor out the larger endpoint so the moment argument is <= 0
    const double m = std::max(a, b);
    const double d = -std::abs(b - a);
    return m + std::log(len) + std::log(expmom0(d));
}

PiecewiseLogLinear::PiecewiseLogLinear(std::vector<double> knots, std::vector<double> phi)
    : knots_(std::move(knots)), phi_(std::move(phi)) {
    if (knots_.size() < 2 || knots_.size() != phi_.size()) {
        throw InputError("PiecewiseLogLinear: need matching knots/phi of length >= 2");
    }
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
        if (!(knots_[i] < knots_[i + 1])) {
            throw InputError("PiecewiseLogLinear: knots must be strictly increasing");
        }
    }
}

double PiecewiseLogLinear::logpdf(double x) const {
    if (!(x >= knots_.front()) || !(x <= knots_.back())) return kNegInf;
    auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - knots_.begin());
    if (i == knots_.size()) return phi_.back(); // x == last knot
    if (i == 0) return phi_.front();
    --i;
    const double h = knots_[i + 1] - knots_[i];
    const double t = (x - knots_[i]) / h;
    // convex combination form keeps knot values exact
    return (1.0 - t) * phi_[i] + t * phi_[i + 1];
}

double PiecewiseLogLinear::log_integral() const {
    double best = kNegInf;
    std::vector<double> seg_logs(knots_.size() - 1);
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
        seg_logs[i] =
            log_integral_exp_segment(phi_[i], phi_[i + 1], knots_[i + 1] - knots_[i]);
        best = std::max(best, seg_logs[i]);
    }
    if (!std::isfinite(best)) return kNegInf;
    double sum = 0.0;
    for (double s : seg_logs) sum += std::exp(s - best);
    return best + std::log(sum);
}

double PiecewiseLogLinear::first_moment() const {
    // per segment with x = x_i + h u:
    //   integral x e^{phi-bar} = e^{hi-end} * h * (x_i * M0 + h * M1)
    // where M0, M1 are moments with the larger endpoint factored out
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
        const double a = phi_[i];
        const double b = phi_[i + 1];
        const double h = knots_[i + 1] - knots_[i];
        const double m = std::max(a, b);
        double m0, m1;
        if (b >= a) {
            const double d = a - b; // <= 0
            // integral u^k e^{a + (b-a)u} du = e^b integral (1-v)^k e^{d v} dv
            m0 = expmom0(d);
            m1 = m0 - expmom1(d);
        } else {
            const double d = b - a; // < 0
            m0 = expmom0(d);
            m1 = expmom1(d);
        }
        total += std::exp(m) * h * (knots_[i] * m0 + h * m1);
    }
    return total;
}

double PiecewiseLogLinear::max_slope_increase() const {
    double worst = -std::numeric_limits<double>::infinity();
    if (knots_.size() < 3) return 0.0;
    for (std::size_t i = 1; i + 1 < knots_.size(); ++i) {
        const double left = (phi_[i] - phi_[i - 1]) / (knots_[i] - knots_[i - 1]);
        const double right = (phi_[i + 1] - phi_[i]) / (knots_[i + 1] - knots_[i]);
        worst = std::max(worst, right - left);
    }
    return worst;
}

} // namespace lcseq
