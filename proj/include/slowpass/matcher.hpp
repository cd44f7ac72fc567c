#pragma once

#include <functional>
#include <string>
#include <vector>

#include "slowpass/numkernel.hpp"
#include "slowpass/simulator.hpp"
#include "slowpass/wp_cascade.hpp"

namespace slowpass {

// A layer as seen by the matcher: an evaluator and its validity predicate in model time t.
struct LayerEval {
    std::string name;
    std::function<cplx(double)> eval;
    std::function<bool(double)> valid;
};

LayerEval outer_layer(double eps, int order, double safety = 5.0);
LayerEval painleve_layer_eval(double eps);
LayerEval separatrix_layer(double eps);  // first spike only
LayerEval averaged_layer(double eps, double phi0 = 0.0, double phi1 = 0.0, double T_period = 1.0);
LayerEval simulation_layer(const SimRun& run);

struct MatchReport {
    std::string layer_a, layer_b;
    double t_lo, t_hi;
    double eps;
    double sup_error;
    double rms_error;
    int samples;
};

// Sup and RMS of |A - B| over n uniform samples; every sample must be valid for both layers.
MatchReport overlap_error(const LayerEval& a, const LayerEval& b, double t_lo, double t_hi, double eps, int n = 201);

struct ScalingFit {
    std::string quantity;
    double slope;
    double half_width;  // two standard errors of the slope
    double intercept;
    double residual;    // RMS of the log-log residuals
    std::vector<double> eps_grid;
};

ScalingFit fit_power_law(const std::string& quantity, const std::vector<double>& eps, const std::vector<double>& values);
ScalingFit order_fit(const std::vector<MatchReport>& reports);

struct SpikeAlignment {
    int k;
    double measured;   // k = 0: offset from t_star; k >= 1: gap to the previous spike
    double predicted;
    double rel_error;
    double amplitude;
    double amplitude_rel_error;  // against the separatrix peak 2 / U_star^2
};

std::vector<SpikeAlignment> spike_alignment(const SimRun& run, const std::vector<CascadeState>& schedule, int k_max = 5);

enum class LayerTag { Separatrix, Intermediate, Painleve, Outer, Averaged, None };
std::string to_string(LayerTag tag);

struct SwitchJump {
    double t;
    LayerTag from, to;
    double jump;
};

struct Composite {
    std::vector<double> t;
    std::vector<cplx> u;  // NaN where no layer is valid
    std::vector<LayerTag> tags;
    std::vector<SwitchJump> jumps;
    int uncovered = 0;
};

struct CompositeOptions {
    double T_period = 1.0;
    double outer_safety = 5.0;
    int outer_order = 2;
    double painleve_reach = 0.4;  // the Painleve layer yields to the outer one above t_star + eps^reach
};

// Innermost valid layer at every grid point. Spikes after the first use the leader alone
// within |theta| < eps^{-1/10}; the intermediate layer fills the gaps between spikes.
// Jumps at each switch are located by bisection.
Composite composite_solution(double eps, const std::vector<double>& t_grid, double phi0, double phi1,
                             const CompositeOptions& opt = {});

struct CriterionResult {
    int id;
    std::string title;
    bool pass;
    bool informational;
    std::string measured;
};

struct AcceptanceOptions {
    std::vector<double> eps_grid{1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
    double C = 0.5;
    int seed_order = 2;
    ToleranceSpec tol{1e-10, 1e-12};
};

// Evaluates the fourteen acceptance criteria; sweep criteria use the eps grid and the
// single-eps criteria use its smallest member.
std::vector<CriterionResult> acceptance_suite(const AcceptanceOptions& opt = {});

// True when every gating criterion passes.
bool acceptance_passed(const std::vector<CriterionResult>& results);

}  // namespace slowpass
