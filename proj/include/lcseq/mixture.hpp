#pragma once

#include <cstdint>
#include <vector>

#include "lcseq/density.hpp"

namespace lcseq {

// Balanced two-component Gaussian mixture with unit variances and means
// -mu/2, +mu/2. Symmetric about 0; log-concave exactly when mu <= 2.
class GaussianMixture1D : public Density {
public:
    explicit GaussianMixture1D(double mu);
    double mu() const { return mu_; }
    double logpdf(double x) const override;

private:
    double mu_;
};

// log[(phi(x - mu/2) + phi(x + mu/2)) / 2], evaluated in log space.
double mixture_logpdf(double mu, double x);

// i.i.d. draws: fair coin picks the component, then a unit normal draw.
// The sequence is a pure function of (mu, n, seed).
std::vector<double> sample_mixture(double mu, std::size_t n, uint64_t seed);

} // namespace lcseq
