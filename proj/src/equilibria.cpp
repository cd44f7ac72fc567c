#include "slowpass/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace slowpass {

BifurcationConstants bifurcation_constants() {
    BifurcationConstants c{};
    const double half_cbrt = std::cbrt(0.5);
    c.t_star = 3.0 * half_cbrt * half_cbrt;
    c.U_star = -half_cbrt;
    c.E_star = 0.75 * half_cbrt;
    // (x - U*)^3 (x + 3U*) has zero cubic coefficient, matching x^4 - 2t x^2 - 4x - 2E.
    c.x_plus_star = -3.0 * c.U_star;
    return c;
}

const BifurcationConstants& bc() {
    static const BifurcationConstants c = bifurcation_constants();
    return c;
}

std::vector<EquilibriumBranch> equilibrium_branches(double t, double cluster_tol) {
    RootOptions ro;
    ro.cluster_tol = cluster_tol;
    auto roots = poly_roots({-1.0, -t, 0.0, 1.0}, RootKind::RealOnly, ro);
    std::vector<EquilibriumBranch> out;
    int count = 0;
    for (const auto& r : roots) count += r.multiplicity;
    if (count == 1) {
        out.push_back({"single", t, roots[0].value.real(), 1});
        return out;
    }
    if (roots.size() == 2) {
        // coalesced pair below the simple root
        out.push_back({"U2", t, roots[0].value.real(), roots[0].multiplicity});
        out.push_back({"U1", t, roots[1].value.real(), roots[1].multiplicity});
        return out;
    }
    const char* labels[3] = {"U3", "U2", "U1"};
    for (std::size_t i = 0; i < roots.size() && i < 3; ++i) out.push_back({labels[i], t, roots[i].value.real(), 1});
    return out;
}

double middle_root(double t) {
    auto br = equilibrium_branches(t, 0.0);
    for (const auto& b : br)
        if (b.label == "U2") return b.value;
    throw Error("NoMiddleRoot", "middle branch exists only for t > t_star");
}

double saddle_root(double t) {
    auto br = equilibrium_branches(t, 0.0);
    if (br.size() < 3) throw Error("NoSaddle", "saddle exists only for t > t_star");
    return br[0].value;
}

double center_root(double t) {
    auto roots = poly_roots({-1.0, -t, 0.0, 1.0}, RootKind::RealOnly, RootOptions{0.0});
    return roots.back().value.real();
}

double frozen_energy(cplx V, double T) {
    double m = std::norm(V);
    return 0.5 * m * m - T * m - 2.0 * V.real();
}

cplx frozen_field(cplx V, double T) { return cplx(0.0, -1.0) * (1.0 + T * V - std::norm(V) * V); }

double ray_level_radius(double T, double level, cplx center, double phi, double r_max) {
    const cplx dir = std::polar(1.0, phi);
    auto g = [&](double r) { return frozen_energy(center + r * dir, T) - level; };
    double g0 = g(0.0);
    if (g0 == 0.0) return 0.0;
    const double dr = 1e-3;
    double a = 0.0, ga = g0;
    for (double r = dr; r <= r_max; r += dr) {
        double gr = g(r);
        if ((gr > 0.0) != (ga > 0.0) || gr == 0.0) return brent_root(g, a, r, 1e-15);
        a = r;
        ga = gr;
    }
    return -1.0;
}

Portrait frozen_portrait(double T, const std::vector<double>& levels, const PortraitOptions& opt) {
    Portrait p;
    p.T = T;
    auto br = equilibrium_branches(T);
    std::vector<double> centers;
    for (const auto& b : br) {
        p.equilibria.push_back(b.value);
        if (b.label != "U3" && b.multiplicity == 1) centers.push_back(b.value);
    }
    std::sort(p.equilibria.begin(), p.equilibria.end());
    for (double level : levels) {
        if (!std::isfinite(level)) throw Error("InvalidInput", "non-finite level");
        bool any = false;
        for (double c : centers) {
            const double hc = frozen_energy(c, T);
            LevelCurve lc{level, c, {}, true};
            if (std::abs(hc - level) <= 1e-12 * std::max(1.0, std::abs(level))) {
                lc.points.assign(static_cast<std::size_t>(opt.n_points) + 1, c);
                p.curves.push_back(lc);
                any = true;
                continue;
            }
            bool ok = true;
            for (int k = 0; k <= opt.n_points; ++k) {
                double phi = 2.0 * std::numbers::pi * k / opt.n_points;
                double r = ray_level_radius(T, level, c, phi, opt.r_max);
                if (r < 0.0) {
                    ok = false;
                    break;
                }
                lc.points.push_back(c + std::polar(r, phi));
            }
            if (!ok) continue;
            p.curves.push_back(std::move(lc));
            any = true;
        }
        if (!any) throw Error("EmptyLevel", "level " + std::to_string(level) + " meets no orbit");
    }
    return p;
}

}  // namespace slowpass
