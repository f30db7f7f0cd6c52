#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

namespace lcseq {

struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool whole_line() const { return !std::isfinite(lo) && !std::isfinite(hi); }
};

// A probability density known through its log. exp(logpdf) integrates to 1
// over the support; logpdf may be -inf outside it. Implementations are
// immutable after construction.
class Density {
public:
    virtual ~Density() = default;
    virtual double logpdf(double x) const = 0;
    virtual Interval support() const { return {}; }
};

using DensityPtr = std::shared_ptr<const Density>;

struct QuadratureGrid {
    double lo;
    double hi;
    int n; // number of nodes, >= 2; Simpson uses the largest odd count <= n

    QuadratureGrid(double lo_, double hi_, int n_);
};

QuadratureGrid default_grid(double lo, double hi); // widens by 10 on each side, 4097 nodes

// Composite Simpson rule on a uniform grid.
double simpson(const std::function<double(double)>& f, const QuadratureGrid& grid);

// Integral of exp(logpdf) over the grid; the usual normalization self-check.
double density_mass(const Density& p, const QuadratureGrid& grid);

struct HellingerResult {
    double value = 0.0;    // in [0, 1]
    bool tail_warning = false; // > 1e-6 of either density's mass fell outside the grid
};

// sqrt(1 - integral sqrt(p q)) by composite Simpson, clamped to [0, 1].
HellingerResult hellinger(const Density& p, const Density& q, const QuadratureGrid& grid);

// log(exp(a) + exp(b)) without overflow; symmetric in its arguments.
double logaddexp(double a, double b);

} // namespace lcseq
