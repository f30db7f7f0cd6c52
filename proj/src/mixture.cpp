#include "lcseq/mixture.hpp"

#include <cmath>

#include "lcseq/errors.hpp"
#include "lcseq/rng.hpp"

namespace lcseq {

namespace {
constexpr double kLogSqrt2Pi = 0.9189385332046727417803297; // log sqrt(2*pi)
constexpr double kLog2 = 0.6931471805599453094172321;
} // namespace

GaussianMixture1D::GaussianMixture1D(double mu) : mu_(mu) {
    if (!(mu >= 0.0) || !std::isfinite(mu)) {
        throw InputError("GaussianMixture1D: mu must be finite and nonnegative");
    }
}

double GaussianMixture1D::logpdf(double x) const { return mixture_logpdf(mu_, x); }

double mixture_logpdf(double mu, double x) {
    if (!std::isfinite(mu) || mu < 0.0) {
        throw InputError("mixture_logpdf: mu must be finite and nonnegative");
    }
    if (!std::isfinite(x)) throw InputError("mixture_logpdf: x must be finite");
    const double half = mu / 2.0;
    const double dm = x - half;
    const double dp = x + half;
    return -kLogSqrt2Pi - kLog2 + logaddexp(-0.5 * dm * dm, -0.5 * dp * dp);
}

std::vector<double> sample_mixture(double mu, std::size_t n, uint64_t seed) {
    if (!std::isfinite(mu) || mu < 0.0) {
        throw InputError("sample_mixture: mu must be finite and nonnegative");
    }
    if (n < 1) throw InputError("sample_mixture: n must be >= 1");
    const double half = mu / 2.0;
    SplitMix64 rng(seed);
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double center = rng.next_double() < 0.5 ? -half : half;
        out.push_back(center + rng.next_normal());
    }
    return out;
}

} // namespace lcseq
