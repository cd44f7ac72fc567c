#pragma once

#include <utility>

#include "slowpass/numkernel.hpp"

namespace slowpass {

struct OuterTerms {
    double t;
    double U0;
    cplx U1;   // purely imaginary
    cplx U2c;  // real
    int order;
};

struct OuterOptions {
    double floor = 1e-5;  // minimum |3 U0^2 - t|
};

OuterTerms outer_terms(double t, int order, const OuterOptions& opt = {});
cplx outer_eval(double t, double eps, int order, const OuterOptions& opt = {});
// d/dt of the truncated series; the second-order term is differenced numerically
cplx outer_deriv(double t, double eps, int order, const OuterOptions& opt = {});
// |eps i U' + |U|^2 U - t U - 1| of the truncated series
double outer_residual(double t, double eps, int order);

std::pair<double, double> outer_validity(double eps, double safety);

// Leading power of (t - t_star) in the n-th coefficient; n = 0 returns 0 (subleading 1/2).
double singular_exponents(int n);

// Coefficient b in U0 = U_star + s^{1/2}/sqrt(3) + b s + ..., s = t - t_star,
// extracted numerically from the middle root by Richardson extrapolation.
double u0_linear_coefficient();

}  // namespace slowpass
