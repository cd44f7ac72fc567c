#pragma once

#include <string>
#include <vector>

#include "slowpass/numkernel.hpp"

namespace slowpass {

struct BifurcationConstants {
    double t_star;       // coalescence time of the saddle and the center
    double U_star;       // double root at t_star
    double E_star;       // frozen energy of the double root
    double x_plus_star;  // simple partner of the triple quartic root
};

BifurcationConstants bifurcation_constants();
// Cached copy; every module reads the constants through this.
const BifurcationConstants& bc();

struct EquilibriumBranch {
    std::string label;  // "U1", "U2", "U3" or "single"
    double t;
    double value;
    int multiplicity = 1;  // 2 flags the coalesced U2/U3 pair near t_star
};

// Real roots of y^3 - t y - 1, sorted descending by label (U3 < U2 < U1).
std::vector<EquilibriumBranch> equilibrium_branches(double t, double cluster_tol = 1e-8);
double middle_root(double t);
double saddle_root(double t);  // U3, the lowest root
double center_root(double t);  // largest real root, the center for every t

double frozen_energy(cplx V, double T);
cplx frozen_field(cplx V, double T);  // V' of i V' + (|V|^2 - T) V = 1

struct LevelCurve {
    double level;
    cplx reference;  // equilibrium the curve winds around
    std::vector<cplx> points;
    bool closed = true;
};

struct Portrait {
    double T;
    std::vector<double> equilibria;
    std::vector<LevelCurve> curves;
};

struct PortraitOptions {
    int n_points = 512;
    double r_max = 10.0;
};

// First crossing of the level along a ray from `center` at angle phi;
// returns a negative value when the ray never meets the level below r_max.
double ray_level_radius(double T, double level, cplx center, double phi, double r_max = 10.0);

Portrait frozen_portrait(double T, const std::vector<double>& levels, const PortraitOptions& opt = {});

}  // namespace slowpass
