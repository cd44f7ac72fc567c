#pragma once

#include <functional>
#include <utility>

#include "slowpass/numkernel.hpp"

namespace slowpass {

struct SeparatrixState {
    double theta;
    cplx w;
};

struct JumpPair {
    int n;
    double X;
    double Y;
};

cplx sep_leader(double theta);
cplx sep_leader_deriv(double theta);
// i w' + |U* + w|^2 (U* + w) - t* (U* + w) - 1
cplx sep_residual(double theta, cplx w, cplx dw);
double sep_conservation(cplx w);

// Second homogeneous solution in closed form, normalised to theta^4 at infinity.
cplx sep_w2_closed(cplx z);
// Analytic continuation of conj(w2(theta)) off the real axis.
cplx sep_w2_closed_conj(cplx z);
cplx sep_w1(cplx z);
cplx sep_w1_conj(cplx z);

struct W2Numeric {
    Trajectory plus;   // theta in [0, theta_max]
    Trajectory minus;  // theta in [0, -theta_max]
    double scale;      // divides the raw solution to normalise the theta^4 coefficient
    cplx eval(double theta) const;
};

// Integrates the homogeneous linearisation outward from a real value at theta = 0.
W2Numeric build_w2_numeric(double theta_max = 200.0, const ToleranceSpec& tol = {1e-13, 1e-15});
const W2Numeric& w2_numeric();

// (w1, w2) with w2 from the numerical construction
std::pair<cplx, cplx> sep_homogeneous(double theta);
cplx sep_wronskian(cplx w1, cplx w2);
// i m' + P m + Q conj(m) for the linearisation about the leader
cplx sep_linear_residual(double theta, cplx m, cplx dm);

// Forcing of the linearised equation together with its conjugate continuation.
struct Forcing {
    std::function<cplx(cplx)> f;
    std::function<cplx(cplx)> fbar;
};

Forcing sep_forcing(int n, double tau0);

struct JumpOptions {
    double r_inner = 2.0;     // finite interval before the tail expansion takes over
    double r_check = 3.0;     // second split used for the stability check
    double circle = 1.5;      // radius for the Laurent coefficients at infinity
    int nodes = 512;
    double stability = 1e-4;
};

// Regularised integral over the real line of a rational integrand g, continued analytically.
double finite_part_integral(const std::function<cplx(cplx)>& g, double r0, const JumpOptions& opt = {});
JumpPair jump_integrals_forcing(int n, const Forcing& F, const JumpOptions& opt = {});
JumpPair jump_integrals(int n, double tau0, const JumpOptions& opt = {});

cplx layer2_eval(double theta, double eps, double tau0);
bool layer2_valid(double theta, double eps);

}  // namespace slowpass
