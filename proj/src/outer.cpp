#include "slowpass/outer.hpp"

#include <cmath>
#include <limits>

#include "slowpass/equilibria.hpp"

namespace slowpass {

namespace {

struct Pieces {
    double u0, du0, v1, dv1, u2;
};

Pieces pieces(double t, const OuterOptions& opt) {
    if (!(t > bc().t_star)) throw Error("TooCloseToBifurcation", "outer expansion needs t > t_star");
    Pieces p{};
    p.u0 = middle_root(t);
    const double a = 3 * p.u0 * p.u0 - t;
    const double b = p.u0 * p.u0 - t;
    if (std::abs(a) < opt.floor) throw Error("TooCloseToBifurcation", "3U0^2 - t below floor");
    const double d = a * b;
    p.du0 = p.u0 / a;
    p.v1 = -p.u0 / d;
    const double dd = (6 * p.u0 * p.du0 - 1) * b + a * (2 * p.u0 * p.du0 - 1);
    p.dv1 = -p.du0 / d + p.u0 * dd / (d * d);
    p.u2 = (p.dv1 - p.u0 * p.v1 * p.v1) / a;
    return p;
}

}  // namespace

OuterTerms outer_terms(double t, int order, const OuterOptions& opt) {
    if (order < 0 || order > 2) throw Error("InvalidInput", "order must be 0, 1 or 2");
    auto p = pieces(t, opt);
    OuterTerms o{t, p.u0, cplx(0.0, 0.0), cplx(0.0, 0.0), order};
    if (order >= 1) o.U1 = cplx(0.0, p.v1);
    if (order >= 2) o.U2c = p.u2;
    return o;
}

cplx outer_eval(double t, double eps, int order, const OuterOptions& opt) {
    auto o = outer_terms(t, order, opt);
    return o.U0 + eps * o.U1 + eps * eps * o.U2c;
}

cplx outer_deriv(double t, double eps, int order, const OuterOptions& opt) {
    auto p = pieces(t, opt);
    cplx d = p.du0;
    if (order >= 1) d += eps * cplx(0.0, p.dv1);
    if (order >= 2) {
        const double h = 1e-5 * std::max(1.0, t - bc().t_star);
        const double hh = std::min(h, 0.25 * (t - bc().t_star));
        d += eps * eps * (pieces(t + hh, opt).u2 - pieces(t - hh, opt).u2) / (2 * hh);
    }
    return d;
}

double outer_residual(double t, double eps, int order) {
    cplx u = outer_eval(t, eps, order);
    cplx du = outer_deriv(t, eps, order);
    return std::abs(cplx(0.0, eps) * du + std::norm(u) * u - t * u - 1.0);
}

std::pair<double, double> outer_validity(double eps, double safety) {
    if (!(eps > 0.0 && eps <= 0.1) || safety < 1.0) throw Error("InvalidInput", "eps in (0, 0.1], safety >= 1");
    return {bc().t_star + safety * std::pow(eps, 0.8), std::numeric_limits<double>::infinity()};
}

double singular_exponents(int n) {
    if (n < 0) throw Error("InvalidInput", "n >= 0");
    if (n == 0) return 0.0;
    if (n % 2 == 1) return (3.0 - 5.0 * n) / 4.0;
    return (2.0 - 5.0 * n) / 4.0;
}

double u0_linear_coefficient() {
    auto b_at = [](double s) {
        double u = middle_root(bc().t_star + s);
        return (u - bc().U_star - std::sqrt(s / 3.0)) / s;
    };
    // b(s) = b + c s^{1/2} + d s + ...; eliminate the half-power then the linear term
    const double s = 1e-4;
    double b1 = b_at(s), b2 = b_at(s / 4), b3 = b_at(s / 16);
    double r1 = 2 * b2 - b1, r2 = 2 * b3 - b2;  // kills s^{1/2}
    return (4 * r2 - r1) / 3.0;                  // kills s
}

}  // namespace slowpass
