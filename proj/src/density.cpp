#include "lcseq/density.hpp"

#include <algorithm>
#include <cmath>

#include "lcseq/errors.hpp"

namespace lcseq {

double logaddexp(double a, double b) {
    if (std::isinf(a) && a < 0) return b;
    if (std::isinf(b) && b < 0) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

QuadratureGrid::QuadratureGrid(double lo_, double hi_, int n_) : lo(lo_), hi(hi_), n(n_) {
    if (!(lo < hi)) throw InputError("QuadratureGrid: lo must be < hi");
    if (n < 2) throw InputError("QuadratureGrid: need at least 2 nodes");
}

QuadratureGrid default_grid(double lo, double hi) {
    return QuadratureGrid(lo - 10.0, hi + 10.0, 4097);
}

double simpson(const std::function<double(double)>& f, const QuadratureGrid& grid) {
    // largest odd node count <= n, so the interval count is even
    int nodes = grid.n;
    if (nodes % 2 == 0) --nodes;
    if (nodes < 3) nodes = 3;
    const int intervals = nodes - 1;
    const double h = (grid.hi - grid.lo) / intervals;
    double sum = f(grid.lo) + f(grid.hi);
    for (int i = 1; i < intervals; ++i) {
        const double x = grid.lo + h * i;
        sum += f(x) * (i % 2 == 1 ? 4.0 : 2.0);
    }
    return sum * h / 3.0;
}

double density_mass(const Density& p, const QuadratureGrid& grid) {
    return simpson([&p](double x) { return std::exp(p.logpdf(x)); }, grid);
}

HellingerResult hellinger(const Density& p, const Density& q, const QuadratureGrid& grid) {
    HellingerResult result;
    // 1 - integral sqrt(pq) == (1/2) integral (sqrt(p) - sqrt(q))^2; the
    // difference form stays accurate when p and q nearly coincide
    const double h2 = 0.5 * simpson(
                                [&](double x) {
                                    const double d = std::exp(0.5 * p.logpdf(x)) -
                                                     std::exp(0.5 * q.logpdf(x));
                                    return d * d;
                                },
                                grid);
    result.value = std::sqrt(std::clamp(h2, 0.0, 1.0));

    const double mass_p = density_mass(p, grid);
    const double mass_q = density_mass(q, grid);
    if (1.0 - mass_p > 1e-6 || 1.0 - mass_q > 1e-6) result.tail_warning = true;
    return result;
}

} // namespace lcseq
