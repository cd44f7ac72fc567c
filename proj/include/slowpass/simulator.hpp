#pragma once

#include <utility>
#include <vector>

#include "slowpass/numkernel.hpp"

namespace slowpass {

struct Spike {
    double t;
    double amplitude;  // |U - U_star| at the peak
};

struct PeriodSample {
    double t;       // midpoint of the cycle
    double period;  // duration of the cycle in t
};

struct SimOptions {
    double prominence = 1.0;      // spike threshold on |U - U_star|
    double max_step_factor = 0.5; // max step in units of eps
};

struct SimRun {
    double eps = 0.0;
    double C = 0.0;
    double t_start = 0.0;
    double t_end = 0.0;
    int seed_order = 2;
    Trajectory trajectory;
    std::vector<Spike> spikes;            // in integration order (decreasing t)
    std::vector<double> crossings;        // cycle boundaries: right-side crossings of the real axis
    std::vector<PeriodSample> periods;    // below t_star only
};

// Integrates eps U' = -i (1 + t U - |U|^2 U) from t_star + C down to t_star - C,
// seeded with the outer series of the given order.
SimRun simulate(double eps, double C, int seed_order, const ToleranceSpec& tol = {1e-10, 1e-12},
                const SimOptions& opt = {});

// Independent runs dispatched concurrently.
std::vector<SimRun> simulate_sweep(const std::vector<double>& eps, double C, int seed_order,
                                   const ToleranceSpec& tol = {1e-10, 1e-12}, const SimOptions& opt = {});

// Local maxima of |U - U_star| above the prominence, refined on the dense output.
std::vector<Spike> find_spikes(const Trajectory& traj, double prominence = 1.0);

// Times where Im U changes sign to the right of the loop center, in integration order.
std::vector<double> find_cycle_crossings(const Trajectory& traj);

// psi = U exp(i t^2 / (2 eps)) sample by sample.
Trajectory psi_from_u(const Trajectory& traj, double eps);
Trajectory u_from_psi(const Trajectory& traj, double eps);

struct CycleAction {
    double t;  // midpoint of the cycle
    double I;
};

// Trapezoid sum of i * conj(U) dU over each cycle below t_star, traversed in integration order.
std::vector<CycleAction> measure_action(const SimRun& run, int samples_per_cycle = 4000);

}  // namespace slowpass
