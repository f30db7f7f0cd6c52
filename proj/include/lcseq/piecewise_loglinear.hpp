#pragma once

#include <vector>

#include "lcseq/density.hpp"

namespace lcseq {

// log of integral_0^len exp(a + (b-a)*u/len) du, stable for b near a.
// len = 0 gives -inf.
double log_integral_exp_segment(double a, double b, double len);

// Exponential moments over a unit interval: E_k(d) = integral_0^1 u^k e^{d u} du.
// Series expansion near d = 0, closed forms otherwise.
double expmom0(double d);
double expmom1(double d);
double expmom2(double d);

// Density exp(phi-bar) where phi-bar linearly interpolates phi between knots;
// zero outside [knots.front(), knots.back()]. Concave phi makes it log-concave.
class PiecewiseLogLinear : public Density {
public:
    PiecewiseLogLinear() = default;
    PiecewiseLogLinear(std::vector<double> knots, std::vector<double> phi);

    double logpdf(double x) const override;
    Interval support() const override { return {knots_.front(), knots_.back()}; }

    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& phi() const { return phi_; }

    // log integral of exp(phi-bar) over the support, by closed-form segments
    double log_integral() const;
    // integral of x * exp(phi-bar), by closed-form segments
    double first_moment() const;
    // largest slope increase over consecutive knot triples (<= 0 for concave)
    double max_slope_increase() const;

private:
    std::vector<double> knots_;
    std::vector<double> phi_;
};

} // namespace lcseq
