#include "lcseq/rng.hpp"

#include <cmath>

namespace lcseq {

double SplitMix64::next_normal() {
    const double u1 = next_double_open();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(2.0 * M_PI * u2);
}

} // namespace lcseq
