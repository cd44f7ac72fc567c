#pragma once

#include <functional>
#include <map>
#include <vector>

#include "slowpass/numkernel.hpp"

namespace slowpass {

struct PainleveState {
    double tau;
    double alpha;
    double alpha_prime;
    double beta;
};

struct PoleFit {
    double tau0 = 0.0;
    double a4 = 0.0;
    double fit_residual = 0.0;
    std::map<int, double> coef;  // free-fit coefficients at powers -2..4
};

// Coefficients of the large-tau series alpha = sum alpha_n tau^{(1-5n)/2}.
std::vector<double> pi_seed_coefficients(int n_terms);
std::pair<double, double> pi_seed(double tau, int n_terms);

struct PainleveOptions {
    double tau_start = 40.0;
    int n_terms = 8;
    double ceiling = 1e6;
};

// Special solution of alpha'' + 3 alpha^2 - tau = 0, integrated toward decreasing tau.
// State: (alpha, alpha').
Trajectory pi_solve_special(double tau_start, const ToleranceSpec& tol, const PainleveOptions& opt = {});

// Laurent coefficients at the pole: c_{-2} = -2, c_2 = -tau0/10, c_3 = -1/6, c_4 = a4, c_k (k >= 5).
std::map<int, double> pole_laurent(double tau0, double a4, int k_max = 60);

struct PoleFitOptions {
    double s_min = 0.04;
    double s_max = 0.6;
    int samples = 80;
    bool tail = true;        // subtract the recursion tail before the free fit
    double bracket = 0.03;   // search width below the hint
    double tolerance = 1e-6; // acceptance of the structural coefficients
};

// alpha(tau) sampled on (tau0 + s_min, tau0 + s_max); hint is an upper bound on the pole.
PoleFit locate_pole(const std::function<double(double)>& alpha, double tau_hint, const PoleFitOptions& opt = {});
PoleFit pi_locate_pole(const Trajectory& traj, const PoleFitOptions& opt = {});

// y'' + q(tau) y = f(tau), integrated from tau_a (y0, y0') toward tau_b.
Trajectory solve_linear_second_order(const std::function<double(double)>& q, const std::function<double(double)>& f,
                                     double tau_a, double tau_b, double y0, double dy0, const ToleranceSpec& tol);

// Large-tau series of the first correction, c1 = tau G(tau^{-5/2}); gamma0 from the outer expansion.
std::vector<double> correction_seed_coefficients(double gamma0, int n_terms);
std::pair<double, double> correction_seed(double tau, double gamma0, int n_terms);

struct CorrectionResult {
    Trajectory traj;               // state (alpha0, alpha0', alpha1, alpha1')
    std::map<int, double> near_pole; // fitted content at powers -4..4
    double fit_residual = 0.0;
    double gamma0 = 0.0;
};

CorrectionResult pi_correction_solve(const Trajectory& traj, double tau_match, const PoleFit& fit,
                                     const ToleranceSpec& tol = {1e-12, 1e-14}, int n_terms = 6);

struct PainleveLayer {
    Trajectory traj;
    PoleFit fit;
    PainleveOptions opt;
    double alpha(double tau) const;
    double alpha_prime(double tau) const;
    PainleveState state(double tau) const;
};

PainleveLayer build_painleve_layer(const ToleranceSpec& tol = {1e-13, 1e-15}, const PainleveOptions& opt = {});
// Built once per process with the default tolerance.
const PainleveLayer& painleve_layer();

cplx layer1_eval(double t, double eps, const PainleveLayer& layer);
bool layer1_valid(double t, double eps, const PainleveLayer& layer);

}  // namespace slowpass
