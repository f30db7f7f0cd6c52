#pragma once

#include <span>
#include <vector>

#include "lcseq/piecewise_loglinear.hpp"

namespace lcseq {

// Sorted distinct positions with positive weights summing to the raw count.
struct WeightedSortedSample {
    std::vector<double> positions; // strictly increasing, length >= 2
    std::vector<double> weights;

    // Sorts and collapses exact duplicates into weights. Throws
    // DegenerateSampleError if fewer than two distinct finite values remain.
    static WeightedSortedSample from_raw(std::span<const double> values);

    double total_weight() const;
    double mean() const; // weighted mean
};

struct MleFitReport {
    PiecewiseLogLinear density;
    double loglik = 0.0; // weighted sum of phi at sample positions
    int iterations = 0;  // outer active-set iterations
    bool converged = false;
    double gap = 0.0; // certified log-likelihood suboptimality (total, >= 0)
};

// Exact one-dimensional log-concave MLE over piecewise-log-linear densities
// with knots at the data points. Active-set solver with a reduced Newton
// inner loop; the returned gap bounds the total log-likelihood suboptimality.
MleFitReport fit_lcmle(const WeightedSortedSample& sample, double tol = 1e-7,
                       int max_iter = 500);

// Weighted log-likelihood of an arbitrary piecewise-log-linear density;
// -inf if any position lies outside its support.
double loglik(const PiecewiseLogLinear& density, const WeightedSortedSample& sample);

} // namespace lcseq
