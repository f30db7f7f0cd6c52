#pragma once

#include <span>
#include <vector>

#include "lcseq/density.hpp"

namespace lcseq {

enum class EstimatorVariant { kde, gmm2, oracle };
enum class BandwidthRule { silverman, fixed };

// Configuration for the predictable estimator feeding the ULR numerator.
// Fields of unused variants are ignored.
struct EstimatorSpec {
    EstimatorVariant variant = EstimatorVariant::kde;
    BandwidthRule bandwidth_rule = BandwidthRule::silverman;
    double fixed_bandwidth = 1.0; // used when bandwidth_rule == fixed, > 0
    int gmm_max_iter = 200;
    double gmm_tol = 1e-8;
    int gmm_restarts = 3;
    double oracle_mu = 0.0; // oracle variant only

    void validate() const; // throws InputError naming the offending field
};

// Gaussian-kernel KDE; strictly positive on the whole line.
class KdeDensity : public Density {
public:
    KdeDensity(std::vector<double> centers, double bandwidth, bool bandwidth_fallback);
    double logpdf(double x) const override;
    double bandwidth() const { return h_; }
    bool bandwidth_fallback() const { return fallback_; }

private:
    std::vector<double> centers_;
    double h_;
    double log_norm_; // -log(n * h * sqrt(2*pi))
    bool fallback_;
};

// Silverman rule-of-thumb: 1.06 * min(sd, IQR/1.34) * n^(-1/5).
// Quantiles are linearly interpolated order statistics.
double silverman_bandwidth(std::span<const double> data);

KdeDensity kde_fit(std::span<const double> prefix, const EstimatorSpec& spec);

struct Gmm2Params {
    double weights[2];
    double means[2];
    double variances[2]; // floored at variance_floor
    static constexpr double variance_floor = 1e-4;
};

struct Gmm2Fit {
    Gmm2Params params;
    double loglik = 0.0;
    std::vector<double> loglik_path; // per-iteration observed-data log-likelihood
    int iterations = 0;
};

// EM from a quantile-split initialization plus seeded restarts; returns the
// highest-likelihood fit.
Gmm2Fit gmm2_fit(std::span<const double> prefix, const EstimatorSpec& spec);

class Gmm2Density : public Density {
public:
    explicit Gmm2Density(const Gmm2Params& p) : p_(p) {}
    double logpdf(double x) const override;

private:
    Gmm2Params p_;
};

// The true mixture density as an estimator that ignores its prefix.
DensityPtr oracle_density(double mu);

struct FittedEstimator {
    DensityPtr density;
    bool fallback = false; // a fallback rule was applied (see below)
};

// Dispatch on spec.variant. GMM2 on prefixes shorter than 4 points (or with
// all points identical) falls back to the KDE rule for that fit, flagged;
// the first batch boundary trains on a single point, so this path is routine.
FittedEstimator fit_estimator(std::span<const double> prefix, const EstimatorSpec& spec);

} // namespace lcseq
