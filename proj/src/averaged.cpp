#include "slowpass/averaged.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include <boost/math/interpolators/barycentric_rational.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include "slowpass/equilibria.hpp"

namespace slowpass {

namespace {

constexpr double kPi = std::numbers::pi;

// -2 conj-derivative of the frozen energy; the frozen field is -i times this.
cplx energy_gradient_half(cplx y, double t) { return 1.0 + t * y - std::norm(y) * y; }

double center_energy(double t) { return frozen_energy(center_root(t), t); }

void require_closed(double t, double E) {
    if (!std::isfinite(t) || !std::isfinite(E)) throw Error("InvalidInput", "non-finite (t, E)");
    if (E < center_energy(t) - 1e-14 * std::max(1.0, std::abs(E)))
        throw Error("NoClosedComponent", "level lies below the center energy");
}

// Real crossings of the loop with the real axis: real roots of x^4 - 2t x^2 - 4x - 2E.
std::pair<double, double> real_crossings(double t, double E) {
    auto r = poly_roots({-2.0 * E, -4.0, -2.0 * t, 0.0, 1.0}, RootKind::RealOnly, RootOptions{0.0});
    if (r.size() < 2) throw Error("NoClosedComponent", "level does not cross the real axis twice");
    if (r.size() > 2 && r[r.size() - 2].value.real() - r[0].value.real() > 1e-4)
        throw Error("WrongRootPattern", "four well separated real crossings");
    return {r.front().value.real(), r.back().value.real()};
}

}  // namespace

double orbit_radius(double t, double E, double c, double phi) {
    const double k = std::cos(phi);
    const std::vector<double> p{0.5 * c * c * c * c - t * c * c - 2.0 * c - E,
                                2.0 * c * c * c * k - 2.0 * t * c * k - 2.0 * k, 2.0 * c * c * k * k + c * c - t,
                                2.0 * c * k, 0.5};
    if (p[0] >= 0.0) {
        if (p[0] <= 1e-14 * std::max(1.0, std::abs(E))) return 0.0;
        throw Error("NoClosedComponent", "center lies outside the level");
    }
    auto g = [&](double r) { return poly_eval(p, r).real(); };
    double best = std::numeric_limits<double>::infinity();
    for (const auto& root : poly_roots(p, RootKind::All, RootOptions{0.0})) {
        double r = root.value.real();
        if (r <= 0.0 || std::abs(root.value.imag()) > 1e-6 * std::max(1.0, r)) continue;
        best = std::min(best, r);
    }
    if (!std::isfinite(best)) throw Error("NoClosedComponent", "ray never meets the level");
    // polish inside a sign-change bracket
    double lo = best * (1 - 1e-7), hi = best * (1 + 1e-7);
    for (int i = 0; i < 20 && g(lo) * g(hi) > 0.0; ++i) {
        lo = std::max(0.0, best - 2.0 * (best - lo));
        hi = best + 2.0 * (hi - best);
    }
    if (g(lo) * g(hi) <= 0.0) return brent_root(g, lo, hi, 1e-16);
    return best;
}

OrbitCurve gamma_curve(double t, double E, int n_points) {
    require_closed(t, E);
    if (n_points < 8) throw Error("InvalidInput", "too few curve points");
    OrbitCurve oc{t, E, center_root(t), {}};
    for (int k = 0; k <= n_points; ++k) {
        double phi = 2.0 * kPi * k / n_points;
        oc.points.push_back(oc.center + std::polar(orbit_radius(t, E, oc.center.real(), phi), phi));
    }
    oc.points.back() = oc.points.front();
    return oc;
}

QuarticRoots quartic_roots(double t, double E) {
    // Deflate one real root at a time so the symmetric functions stay consistent even where
    // three roots cluster and cannot be resolved individually.
    auto deflate = [](const std::vector<double>& c, double r) {
        std::vector<double> q(c.size() - 1);
        double carry = 0.0;
        for (std::size_t i = c.size() - 1; i-- > 0;) {
            carry = c[i + 1] + carry * r;
            q[i] = carry;
        }
        return q;
    };
    const std::vector<double> quartic{-2.0 * E, -4.0, -2.0 * t, 0.0, 1.0};
    auto top = poly_roots(quartic, RootKind::RealOnly, RootOptions{0.0});
    if (top.empty()) throw Error("WrongRootPattern", "no real root");
    QuarticRoots q{};
    q.x_plus = top.back().value.real();
    const auto cubic = deflate(quartic, q.x_plus);
    auto low = poly_roots(cubic, RootKind::RealOnly, RootOptions{0.0});
    if (low.empty()) throw Error("WrongRootPattern", "only one real root");
    q.x_minus = low.front().value.real();
    const auto quad = deflate(cubic, q.x_minus);
    q.m = -0.5 * quad[1];
    const double n2 = quad[0] - q.m * q.m;
    if (n2 < -1e-8) throw Error("WrongRootPattern", "four real roots");
    q.n = std::sqrt(std::max(0.0, n2));
    const double s2 = quad[0], xm = q.x_minus, xp = q.x_plus;
    q.vieta_residual = std::max({std::abs(xm * xp * s2 + 2.0 * E), std::abs(-(xm + xp) * s2 - 2.0 * q.m * xm * xp + 4.0),
                                 std::abs(s2 + xm * xp + 2.0 * q.m * (xm + xp) + 2.0 * t), std::abs(xm + xp + 2.0 * q.m)});
    return q;
}

double action_I(double t, double E, ActionMethod method) {
    require_closed(t, E);
    if (method == ActionMethod::Polar) {
        const double c = center_root(t);
        // the level set is symmetric about the real axis
        // the radius is only cube-root accurate at an exact corner, so accept the best estimate there
        const double cuts[] = {0.0, kPi - 0.3, kPi - 3e-2, kPi - 3e-3, kPi - 3e-4, kPi - 3e-5, kPi};
        double half = 0.0, err = 0.0;
        for (int i = 0; i + 1 < 7; ++i)
            half += adaptive_quad([&](double phi) {
                double r = orbit_radius(t, E, c, phi);
                return r * r;
            }, cuts[i], cuts[i + 1], 1e-13, &err);
        return 2.0 * half;
    }
    // Upper half of the region between the inner and outer radial branches
    // |y|^2 = t -+ sqrt(t^2 + 2E + 4x).
    auto [xm, xp] = real_crossings(t, E);
    const double xl = -(t * t + 2.0 * E) / 4.0;
    auto outer = [&](double x) { return std::sqrt(std::max(0.0, t - x * x + std::sqrt(std::max(0.0, t * t + 2.0 * E + 4.0 * x)))); };
    auto inner = [&](double x) { return std::sqrt(std::max(0.0, t - x * x - std::sqrt(std::max(0.0, t * t + 2.0 * E + 4.0 * x)))); };
    double area;
    if (t - xl * xl >= 0.0 && xm >= xl) {
        area = adaptive_quad(outer, xl, xp, 1e-13) - adaptive_quad(inner, xl, xm, 1e-13);
    } else {
        area = adaptive_quad(outer, xm, xp, 1e-13);
    }
    return 4.0 * area;
}

double sigma_star() {
    static const double s = action_I(bc().t_star, bc().E_star, ActionMethod::Segments);
    return s;
}

double solve_E_of_t(double t, double sigma) {
    if (!(t < bc().t_star)) throw Error("InvalidInput", "energy solve requires t below t_star");
    if (!(sigma > 0.0)) throw Error("NoBracket", "loop action must be positive");
    const double Ec = center_energy(t);
    double lo = Ec, hi = Ec + 0.5;
    int guard = 0;
    while (action_I(t, hi) < sigma) {
        lo = hi;
        hi = Ec + 2.0 * (hi - Ec);
        if (++guard > 60) throw Error("NoBracket", "action never reaches sigma");
    }
    return brent_root([&](double E) { return E <= Ec ? -sigma : action_I(t, E) - sigma; }, lo, hi, 1e-16);
}

namespace {

// Upper half of the loop as graphs over x: the outer branch ending at x_plus and, when the
// branches meet at x_l, the inner branch on [x_l, x_minus]; |y|^2 = t -+ sqrt(D), D = t^2 + 2E + 4x.
// Each branch is swept by x = left + L sin^2(theta) with the radicands factored at their known
// roots, so every integrand below is smooth in theta.
struct BranchPoint {
    double x, Y, dx, dY, dtau;  // derivatives with respect to theta
};

struct UpperHalf {
    double t, E, xl, xm, xp;
    bool has_inner;

    double sqrtD(double x) const { return std::sqrt(std::max(0.0, t * t + 2.0 * E + 4.0 * x)); }

    BranchPoint outer(double th) const {
        const double s = std::sin(th), c = std::cos(th);
        if (has_inner) {
            const double L = xp - xl, rL = std::sqrt(L), x = xl + L * s * s, sD = 2.0 * rL * s;
            const double h = std::max(0.0, (x + xp) - 4.0 / (sD + 2.0 * rL));
            const double rh = std::sqrt(h);
            return {x, rL * c * rh, 2.0 * L * s * c, (1.0 - 2.0 * x * rL * s) / rh, 1.0 / rh};
        }
        const double L = xp - xm, x = xm + L * s * s, sD = sqrtD(x), sDm = sqrtD(xm), sDp = sqrtD(xp);
        const double k = 1.0 + 16.0 / ((sD + sDp) * (sDm + sDp) * (sD + sDm));
        const double rk = std::sqrt(k);
        return {x, L * s * c * rk, 2.0 * L * s * c, 2.0 * (-x + 1.0 / sD) / rk, 2.0 / (rk * sD)};
    }

    BranchPoint inner(double th) const {
        const double s = std::sin(th), c = std::cos(th);
        const double L = xm - xl, rL = std::sqrt(L), x = xl + L * s * s, sD = 2.0 * rL * s;
        const double h = std::max(0.0, (x + xm) + 4.0 / (sD + 2.0 * rL));
        const double rh = std::sqrt(h);
        return {x, rL * c * rh, 2.0 * L * s * c, (-1.0 - 2.0 * x * rL * s) / rh, 1.0 / rh};
    }
};

UpperHalf upper_half(double t, double E) {
    require_closed(t, E);
    auto [xm, xp] = real_crossings(t, E);
    const double xl = -(t * t + 2.0 * E) / 4.0;
    return {t, E, xl, xm, xp, t - xl * xl >= 0.0 && xm >= xl};
}

}  // namespace

double frozen_period(double t, double E) {
    const auto u = upper_half(t, E);
    double P = adaptive_quad([&](double th) { return u.outer(th).dtau; }, 0.0, kPi / 2, 1e-10);
    if (u.has_inner) P += adaptive_quad([&](double th) { return u.inner(th).dtau; }, 0.0, kPi / 2, 1e-10);
    return 2.0 * P;
}

cplx period_integral_K(double t, double E) {
    const auto u = upper_half(t, E);
    const auto R = radicand_coefficients(t, E, Radicand::TwoCubic);
    // branch: principal root at the left crossing, continued along the loop as a multiple of q
    const double branch = energy_gradient_half(u.xm, t).real() >= 0.0 ? 1.0 : -1.0;
    auto im_part = [&](const BranchPoint& b) {
        const cplx y(b.x, b.Y);
        const cplx q = energy_gradient_half(y, t);
        const cplx rad = poly_eval(R, y);
        if (std::abs(rad - q * q) > 1e-8 * std::max(1.0, std::abs(rad)))
            throw Error("BranchTrackingFailed", "radicand departs from the squared field on the loop");
        return (cplx(b.dx, b.dY) / (branch * q)).imag();
    };
    // along the flow x runs left on the outer branch and right on the inner one;
    // the lower half mirrors the upper so K = 2i Im(upper part)
    double im = -adaptive_quad([&](double th) { return im_part(u.outer(th)); }, 0.0, kPi / 2, 1e-10);
    if (u.has_inner) im += adaptive_quad([&](double th) { return im_part(u.inner(th)); }, 0.0, kPi / 2, 1e-10);
    return cplx(0.0, 2.0 * im);
}

double s_prime(double t, double E, double T_period) {
    const cplx K = period_integral_K(t, E);
    const cplx sp = T_period / (cplx(0.0, 1.0) * K);
    if (std::abs(sp.imag()) > 1e-8 * std::abs(sp)) throw Error("NotReal", "period constraint gives a complex rate");
    return sp.real();
}

std::vector<double> radicand_coefficients(double t, double E, Radicand variant) {
    return {1.0, 2.0 * t, 2.0 * E + t * t, variant == Radicand::TwoCubic ? 2.0 : 3.0};
}

cplx LeaderOrbit::eval(double t1) const {
    double r = std::fmod(t1, T_period);
    if (r < 0.0) r += T_period;
    r = std::min(r, traj.t_back());
    return traj.eval(r, 0);
}

LeaderOrbit leader_orbit(double t, double E, double T_period, Radicand variant) {
    if (!(T_period > 0.0)) throw Error("InvalidInput", "period must be positive");
    require_closed(t, E);
    LeaderOrbit lo{t, E, T_period, T_period / frozen_period(t, E), variant, real_crossings(t, E).first, Trajectory(2)};
    const auto R = radicand_coefficients(t, E, variant);
    const std::vector<double> dR{R[1], 2.0 * R[2], 3.0 * R[3]};
    const double Sp = lo.S_prime;
    // (U, s) with s^2 = radicand carried along so the square-root branch stays continuous
    auto f = [&](double, const CVec& y, CVec& dy) {
        dy[0] = cplx(0.0, -1.0) * y[1] / Sp;
        dy[1] = poly_eval(dR, y[0]) * dy[0] / (2.0 * y[1]);
    };
    IvpOptions io;
    io.ceiling = 1e3;
    lo.traj = integrate_ivp(f, 0.0, T_period, {lo.u0, std::sqrt(cplx(poly_eval(R, lo.u0)))}, {1e-12, 1e-14, T_period / 64}, io);
    lo.complete = !has_event(lo.traj, "blowup") && std::abs(lo.traj.t_back() - T_period) < 1e-12 * T_period;
    return lo;
}

RadicandChoice radicand_select(double t, double E) {
    const double P = frozen_period(t, E);
    const cplx u0 = real_crossings(t, E).first;
    auto f = [t](double, const CVec& y, CVec& dy) { dy[0] = frozen_field(y[0], t); };
    auto frozen = integrate_ivp(f, 0.0, P, {u0}, {1e-12, 1e-14, P / 64});
    auto mismatch = [&](Radicand v) {
        try {
            auto lo = leader_orbit(t, E, 1.0, v);
            if (!lo.complete) return std::numeric_limits<double>::infinity();
            double worst = 0.0;
            for (int j = 0; j <= 200; ++j) {
                double tau = P * j / 200.0;
                worst = std::max(worst, std::abs(lo.traj.eval(std::min(tau * lo.S_prime, lo.traj.t_back()), 0) -
                                                 frozen.eval(std::min(tau, frozen.t_back()), 0)));
            }
            return worst;
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    RadicandChoice rc{Radicand::TwoCubic, mismatch(Radicand::TwoCubic), mismatch(Radicand::ThreeCubic)};
    if (rc.mismatch_three < rc.mismatch_two) rc.selected = Radicand::ThreeCubic;
    if (std::min(rc.mismatch_two, rc.mismatch_three) > 1e-4)
        throw Error("NeitherVariantConsistent", "no radicand reproduces the frozen orbit");
    return rc;
}

DegenerationScales degeneration_scales(double mu, double T_period) {
    if (!(mu < 0.0)) throw Error("InvalidInput", "degeneration scales need t below t_star");
    const double t = bc().t_star + mu;
    const double E = solve_E_of_t(t, sigma_star());
    const cplx K = period_integral_K(t, E);
    return {mu, E - bc().E_star, K, T_period / (cplx(0.0, 1.0) * K).real()};
}

EnergyDerivatives energy_derivatives(double t, double E, double T_period) {
    double h = 1e-6 * std::max(1.0, std::abs(E));
    // the loop shape near the coalescence point changes on an energy scale (t_star - t)^{3/2}
    if (t < bc().t_star) h = std::min(h, 1e-2 * std::pow(bc().t_star - t, 1.5));
    const double sp = T_period / frozen_period(t, E + h), sm = T_period / frozen_period(t, E - h);
    return {(sp - sm) / (2.0 * h), (action_I(t, E + h) - action_I(t, E - h)) / (2.0 * h)};
}

double phase_rate(double t, double phi1, double T_period) {
    if (phi1 == 0.0) return 0.0;
    const double E = solve_E_of_t(t, sigma_star());
    auto d = energy_derivatives(t, E, T_period);
    return phi1 * d.dS_prime / d.dI;
}

ModulationTable::ModulationTable(double depth, int nodes) : depth_(depth) {
    if (!(depth > 0.0) || nodes < 8) throw Error("InvalidInput", "bad modulation table size");
    const double xmax = std::pow(depth, 0.25);
    const double ts = bc().t_star;
    std::vector<double> gS(nodes), gP(nodes);
    for (int j = 0; j < nodes; ++j) {
        const double x = xmax * j / (nodes - 1);
        x_.push_back(x);
        t_.push_back(ts - std::pow(x, 4));
        if (j == 0) {
            E_.push_back(bc().E_star);
            K_.push_back(std::numeric_limits<double>::infinity());
            Sp_.push_back(0.0);
            continue;
        }
        const double E = solve_E_of_t(t_.back(), sigma_star());
        const double P = frozen_period(t_.back(), E);
        auto d = energy_derivatives(t_.back(), E, 1.0);
        E_.push_back(E);
        K_.push_back(P);
        Sp_.push_back(1.0 / P);
        // dt = -4 x^3 dx
        gS[j] = -4.0 * x * x * x / P;
        gP[j] = -4.0 * x * x * x * d.dS_prime / d.dI;
    }
    gS[0] = 0.0;
    gP[0] = 2.0 * gP[1] - gP[2];
    // integrate the interpolated integrands cell by cell
    using boost::math::barycentric_rational;
    barycentric_rational<double> fS(x_.data(), gS.data(), x_.size(), 3), fP(x_.data(), gP.data(), x_.size(), 3);
    S_.assign(nodes, 0.0);
    phi_.assign(nodes, 0.0);
    for (int j = 1; j < nodes; ++j) {
        S_[j] = S_[j - 1] + boost::math::quadrature::gauss<double, 7>::integrate(fS, x_[j - 1], x_[j]);
        phi_[j] = phi_[j - 1] + boost::math::quadrature::gauss<double, 7>::integrate(fP, x_[j - 1], x_[j]);
    }
}

double ModulationTable::interp(const std::vector<double>& v, double t) const {
    const double ts = bc().t_star;
    if (t > ts || t < ts - depth_) throw Error("OutOfLayer", "time outside the modulation table");
    const double x = std::pow(ts - t, 0.25);
    // local cubic Lagrange through the four nearest nodes
    const double h = x_[1] - x_[0];
    long j = static_cast<long>(std::floor(x / h)) - 1;
    j = std::clamp(j, 0L, static_cast<long>(x_.size()) - 4);
    double s = 0.0;
    for (int a = 0; a < 4; ++a) {
        double w = 1.0;
        for (int b = 0; b < 4; ++b)
            if (b != a) w *= (x - x_[j + b]) / (x_[j + a] - x_[j + b]);
        s += w * v[j + a];
    }
    return s;
}

double ModulationTable::E(double t) const { return interp(E_, t); }
double ModulationTable::S(double t, double T_period) const { return T_period * interp(S_, t); }
double ModulationTable::phi(double t, double phi0, double phi1, double T_period) const {
    return phi0 + phi1 * T_period * interp(phi_, t);
}

std::vector<ModulationRow> ModulationTable::rows(double phi0, double phi1, double T_period) const {
    std::vector<ModulationRow> out;
    for (std::size_t j = 1; j < x_.size(); ++j)
        out.push_back({t_[j], E_[j], T_period * S_[j], phi0 + phi1 * T_period * phi_[j], sigma_star(), K_[j],
                       T_period * Sp_[j]});
    return out;
}

const ModulationTable& modulation_table() {
    static const ModulationTable table;
    return table;
}

std::vector<double> phase_phi(const std::vector<double>& t_grid, double phi0, double phi1, double T_period) {
    std::vector<double> out;
    out.reserve(t_grid.size());
    if (phi1 == 0.0) {
        out.assign(t_grid.size(), phi0);
        return out;
    }
    const auto& tab = modulation_table();
    for (double t : t_grid) out.push_back(tab.phi(t, phi0, phi1, T_period));
    return out;
}

bool averaged_valid(double t, double eps, const AveragedOptions& opt) {
    const double gap = bc().t_star - t;
    return gap * std::pow(eps, -2.0 / 3.0) > opt.collar_factor && gap <= modulation_table().depth();
}

cplx averaged_eval(double t, double eps, double phi0, double phi1, const AveragedOptions& opt) {
    if (!(eps > 0.0)) throw Error("InvalidInput", "eps must be positive");
    if (!averaged_valid(t, eps, opt)) throw Error("OutOfLayer", "time inside the collar or beyond the table");
    const auto& tab = modulation_table();
    const double E = tab.E(t);
    const double t1 = tab.S(t, opt.T_period) / eps + tab.phi(t, phi0, phi1, opt.T_period);
    return leader_orbit(t, E, opt.T_period).eval(t1);
}

}  // namespace slowpass
