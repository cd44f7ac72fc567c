#pragma once

#include <memory>
#include <string>
#include <vector>

#include "slowpass/numkernel.hpp"

namespace slowpass {

// Closed level curve of the frozen energy around the big-amplitude center.
struct OrbitCurve {
    double t;
    double E;
    cplx center;
    std::vector<cplx> points;  // counterclockwise, first point repeated at the end
};

// Sample the level E at slow time t by polar rays from the center.
OrbitCurve gamma_curve(double t, double E, int n_points = 1024);

// Radius of the level curve along the ray at angle phi from the center.
double orbit_radius(double t, double E, double center, double phi);

struct QuarticRoots {
    double x_minus, x_plus, m, n;
    double vieta_residual;
};

// Real and complex roots of x^4 - 2t x^2 - 4x - 2E in the two-real-root regime.
QuarticRoots quartic_roots(double t, double E);

enum class ActionMethod { Polar, Segments };

// Doubled enclosed area of the level curve, i.e. the loop action i*oint conj(u) du
// taken with the orientation that makes it positive.
double action_I(double t, double E, ActionMethod method = ActionMethod::Segments);

// Loop action at the coalescence point, the modulation constant for the confluent branch.
double sigma_star();

// Energy at slow time t whose loop action equals sigma.
double solve_E_of_t(double t, double sigma);

// Frozen-system period of the loop; equals dI/dE.
double frozen_period(double t, double E);

// oint dy / sqrt(radicand) along the flow, with the branch that is the principal root at x_minus.
cplx period_integral_K(double t, double E);
double s_prime(double t, double E, double T_period = 1.0);

enum class Radicand { TwoCubic, ThreeCubic };

// Coefficients c0..c3 of the cubic under the square root in the leader-orbit equation.
std::vector<double> radicand_coefficients(double t, double E, Radicand variant);

struct LeaderOrbit {
    double t, E, T_period, S_prime;
    Radicand variant;
    cplx u0;
    Trajectory traj;  // state (U, sqrt radicand) against the fast variable on [0, T_period]
    bool complete = true;
    cplx eval(double t1) const;  // periodic extension
};

// Integrates i S' dU/dt1 = sqrt(radicand) from the left real crossing of the loop.
LeaderOrbit leader_orbit(double t, double E, double T_period = 1.0, Radicand variant = Radicand::TwoCubic);

struct RadicandChoice {
    Radicand selected;
    double mismatch_two;    // max distance from the frozen orbit over one period
    double mismatch_three;
};

// Picks the cubic whose orbit reproduces direct integration of the frozen system.
RadicandChoice radicand_select(double t, double E);

struct DegenerationScales {
    double mu;
    double delta;
    cplx K;
    double S_prime;
};

DegenerationScales degeneration_scales(double mu, double T_period = 1.0);

// d(S')/dE and dI/dE at fixed t by central differences.
struct EnergyDerivatives {
    double dS_prime;
    double dI;
};
EnergyDerivatives energy_derivatives(double t, double E, double T_period = 1.0);

// Phase-shift rate on the confluent branch for a given invariant phi1.
double phase_rate(double t, double phi1, double T_period = 1.0);

struct ModulationRow {
    double t, E, S, phi, sigma, K_abs, S_prime;
};

// Slow modulation of the confluent branch tabulated on a grid uniform in (t_star - t)^{1/4}.
class ModulationTable {
public:
    ModulationTable(double depth = 1.0, int nodes = 161);
    double depth() const { return depth_; }
    // Values at unit period and unit phase invariant; the public accessors rescale.
    double E(double t) const;
    double S(double t, double T_period = 1.0) const;
    double phi(double t, double phi0, double phi1, double T_period = 1.0) const;
    std::vector<ModulationRow> rows(double phi0 = 0.0, double phi1 = 0.0, double T_period = 1.0) const;

private:
    double interp(const std::vector<double>& v, double t) const;
    double depth_;
    std::vector<double> x_, t_, E_, S_, phi_, K_, Sp_;
};

const ModulationTable& modulation_table();

// Phase values phi(t) on the grid with phi(t_star) = phi0.
std::vector<double> phase_phi(const std::vector<double>& t_grid, double phi0, double phi1, double T_period = 1.0);

struct AveragedOptions {
    double T_period = 1.0;
    double collar_factor = 5.0;  // requires (t_star - t) eps^{-2/3} above this
};

bool averaged_valid(double t, double eps, const AveragedOptions& opt = {});
cplx averaged_eval(double t, double eps, double phi0 = 0.0, double phi1 = 0.0, const AveragedOptions& opt = {});

}  // namespace slowpass
