#include "slowpass/painleve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "slowpass/equilibria.hpp"
#include "slowpass/outer.hpp"

namespace slowpass {

namespace {

double p_exp(int n) { return (1.0 - 5.0 * n) / 2.0; }

}  // namespace

std::vector<double> pi_seed_coefficients(int n_terms) {
    std::vector<double> a(std::max(n_terms, 1));
    a[0] = 1.0 / std::sqrt(3.0);
    for (int m = 1; m < n_terms; ++m) {
        double p = p_exp(m - 1);
        double s = a[m - 1] * p * (p - 1.0);
        for (int i = 1; i < m; ++i) s += 3.0 * a[i] * a[m - i];
        a[m] = -s / (6.0 * a[0]);
    }
    return a;
}

std::pair<double, double> pi_seed(double tau, int n_terms) {
    if (tau < 10.0) throw Error("TauTooSmall", "large-tau series needs tau >= 10");
    if (n_terms < 1) throw Error("InvalidInput", "n_terms >= 1");
    auto a = pi_seed_coefficients(n_terms);
    double v = 0.0, d = 0.0;
    for (int n = 0; n < n_terms; ++n) {
        double p = p_exp(n);
        v += a[n] * std::pow(tau, p);
        d += a[n] * p * std::pow(tau, p - 1.0);
    }
    return {v, d};
}

Trajectory pi_solve_special(double tau_start, const ToleranceSpec& tol, const PainleveOptions& opt) {
    auto [a, da] = pi_seed(tau_start, opt.n_terms);
    auto f = [](double tau, const CVec& y, CVec& dy) {
        dy[0] = y[1];
        dy[1] = tau - 3.0 * y[0] * y[0];
    };
    IvpOptions io;
    io.ceiling = opt.ceiling;
    return integrate_ivp(f, tau_start, -50.0, {a, da}, tol, io);
}

std::map<int, double> pole_laurent(double tau0, double a4, int k_max) {
    std::map<int, double> c;
    for (int k = -2; k <= k_max; ++k) c[k] = 0.0;
    c[-2] = -2.0;
    c[2] = -tau0 / 10.0;
    c[3] = -1.0 / 6.0;
    c[4] = a4;
    for (int k = 5; k <= k_max; ++k) {
        double s = 0.0;
        for (int i = -1; i <= k - 1; ++i) {
            int j = k - 2 - i;
            if (j < -1 || j > k - 1) continue;
            s += c[i] * c[j];
        }
        c[k] = -3.0 * s / (k * (k - 1.0) - 12.0);
    }
    return c;
}

namespace {

double tail_value(const std::map<int, double>& c, double s) {
    double v = 0.0, p = std::pow(s, 5);
    for (auto it = c.find(5); it != c.end(); ++it) {
        v += it->second * p;
        p *= s;
    }
    return v;
}

LaurentFit fit_at(const std::function<double(double)>& alpha, double tau0, double& a4, const PoleFitOptions& opt) {
    std::vector<double> base(opt.samples);
    for (int i = 0; i < opt.samples; ++i) {
        double s = opt.s_min + (opt.s_max - opt.s_min) * i / (opt.samples - 1.0);
        base[i] = alpha(tau0 + s);
    }
    LaurentFit lf;
    for (int it = 0; it < (opt.tail ? 4 : 1); ++it) {
        std::map<int, double> c;
        if (opt.tail) c = pole_laurent(tau0, a4);
        std::vector<std::pair<double, double>> pts;
        for (int i = 0; i < opt.samples; ++i) {
            double s = opt.s_min + (opt.s_max - opt.s_min) * i / (opt.samples - 1.0);
            pts.emplace_back(tau0 + s, base[i] - (opt.tail ? tail_value(c, s) : 0.0));
        }
        lf = fit_laurent(pts, tau0, {-2, -1, 0, 1, 2, 3, 4});
        // far from the pole the fitted a4 is meaningless and would blow up the tail
        a4 = std::clamp(std::isfinite(lf.coef[4]) ? lf.coef[4] : 0.0, -1.0, 1.0);
    }
    return lf;
}

}  // namespace

PoleFit locate_pole(const std::function<double(double)>& alpha, double tau_hint, const PoleFitOptions& opt) {
    auto objective = [&](double tau0) {
        double a4 = 0.0;
        double r = fit_at(alpha, tau0, a4, opt).residual;
        return std::isfinite(r) ? r : std::numeric_limits<double>::max();
    };
    // coarse scan first: away from the pole the objective has spurious local minima
    const int n = 120;
    const double h = opt.bracket / n;
    int arg = 0;
    double low = std::numeric_limits<double>::max();
    for (int i = 0; i <= n; ++i) {
        double r = objective(tau_hint - i * h);
        if (r < low) {
            low = r;
            arg = i;
        }
    }
    const double centre = tau_hint - arg * h;
    // golden section; the objective is V-shaped at the pole, which defeats parabolic steps
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = centre - h, b = std::min(centre + h, tau_hint);
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = objective(x1), f2 = objective(x2);
    while (b - a > 1e-14) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = objective(x2);
        }
    }
    PoleFit pf;
    pf.tau0 = 0.5 * (a + b);
    double a4 = 0.0;
    auto lf = fit_at(alpha, pf.tau0, a4, opt);
    pf.a4 = lf.coef[4];
    pf.fit_residual = lf.residual;
    pf.coef = lf.coef;
    const double tol = opt.tolerance;
    bool ok = std::abs(lf.coef[-2] + 2.0) < tol && std::abs(lf.coef[-1]) < tol && std::abs(lf.coef[0]) < tol &&
              std::abs(lf.coef[1]) < tol && std::abs(lf.coef[2] + pf.tau0 / 10.0) < tol * std::max(1.0, std::abs(pf.tau0 / 10.0));
    if (!ok)
        throw Error("FitFailed", "Laurent structure violated at tau0 = " + std::to_string(pf.tau0) + " (c-2 = " +
                                     std::to_string(lf.coef[-2]) + ", c2 = " + std::to_string(lf.coef[2]) + ")");
    return pf;
}

PoleFit pi_locate_pole(const Trajectory& traj, const PoleFitOptions& opt) {
    const Event* e = first_event(traj, "blowup");
    if (!e) throw Error("FitFailed", "trajectory has no blowup event");
    auto alpha = [&traj](double tau) { return traj.eval(tau, 0).real(); };
    return locate_pole(alpha, e->t, opt);
}

Trajectory solve_linear_second_order(const std::function<double(double)>& q, const std::function<double(double)>& f,
                                     double tau_a, double tau_b, double y0, double dy0, const ToleranceSpec& tol) {
    auto field = [&](double tau, const CVec& y, CVec& dy) {
        dy[0] = y[1];
        dy[1] = f(tau) - q(tau) * y[0];
    };
    return integrate_ivp(field, tau_a, tau_b, {y0, dy0}, tol);
}

std::vector<double> correction_seed_coefficients(double gamma0, int n_terms) {
    const int n = std::max(n_terms, 1);
    const double u = bc().U_star, k = 1.0 / u, u2 = u * u;
    auto a = pi_seed_coefficients(n + 1);
    std::vector<double> a1(n + 1), a2(n + 1);
    for (int i = 0; i <= n; ++i) {
        double p = p_exp(i);
        a1[i] = a[i] * p;
        a2[i] = a[i] * p * (p - 1.0);
    }
    auto conv = [](const std::vector<double>& x, const std::vector<double>& y, int m) {
        double s = 0.0;
        for (int i = 0; i <= m; ++i) s += x[i] * y[m - i];
        return s;
    };
    std::vector<double> aa(n + 1);
    for (int m = 0; m <= n; ++m) aa[m] = conv(a, a, m);
    std::vector<double> g(n);
    g[0] = gamma0;
    for (int m = 1; m < n; ++m) {
        double q = 1.0 - 2.5 * (m - 1);
        double s = g[m - 1] * q * (q - 1.0);
        for (int j = 0; j < m; ++j) s += 6.0 * a[m - j] * g[j];
        s += k * (conv(aa, a, m) - a[m]);
        s += u2 * conv(a1, a1, m - 1);
        s -= 2.0 * u2 * (conv(a1, a1, m - 1) + conv(a, a2, m - 1));
        g[m] = -s / (6.0 * a[0]);
    }
    return g;
}

std::pair<double, double> correction_seed(double tau, double gamma0, int n_terms) {
    if (tau < 10.0) throw Error("TauTooSmall", "large-tau series needs tau >= 10");
    auto g = correction_seed_coefficients(gamma0, n_terms);
    const double x = std::pow(tau, -2.5);
    double G = 0.0, dG = 0.0, xp = 1.0;
    for (std::size_t n = 0; n < g.size(); ++n) {
        G += g[n] * xp;
        dG += n * g[n] * xp;  // x G'(x)
        xp *= x;
    }
    return {tau * G, G - 2.5 * dG};
}

CorrectionResult pi_correction_solve(const Trajectory& traj, double tau_match, const PoleFit& fit,
                                     const ToleranceSpec& tol, int n_terms) {
    CorrectionResult r;
    r.gamma0 = u0_linear_coefficient();
    const double u = bc().U_star, k = 1.0 / u;
    auto [c, dc] = correction_seed(tau_match, r.gamma0, n_terms);
    CVec y0{traj.eval(tau_match, 0), traj.eval(tau_match, 1), c, dc};
    auto field = [u, k](double tau, const CVec& y, CVec& dy) {
        const double a = y[0].real(), da = y[1].real();
        const double dda = tau - 3.0 * a * a;
        const double b = -u * da, db = -u * dda;
        dy[0] = da;
        dy[1] = dda;
        dy[2] = y[3];
        dy[3] = -6.0 * a * y[2] - k * (a * a * a - a * tau) - b * b - 2.0 * u * (da * b + a * db);
    };
    const double stop = fit.tau0 + 0.02;
    IvpOptions io;
    io.ceiling = 1e12;  // the correction grows like (tau - tau0)^-4
    r.traj = integrate_ivp(field, tau_match, stop, y0, tol, io);
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 80; ++i) {
        double s = 0.03 + 0.37 * i / 79.0;
        pts.emplace_back(fit.tau0 + s, r.traj.eval(fit.tau0 + s, 2).real());
    }
    auto lf = fit_laurent(pts, fit.tau0, {-4, -3, -2, -1, 0, 1, 2, 3, 4});
    r.near_pole = lf.coef;
    r.fit_residual = lf.residual;
    return r;
}

double PainleveLayer::alpha(double tau) const {
    if (tau >= opt.tau_start) return pi_seed(tau, opt.n_terms).first;
    if (tau < traj.t_back()) throw Error("OutOfLayer", "tau beyond the integrated range");
    return traj.eval(tau, 0).real();
}

double PainleveLayer::alpha_prime(double tau) const {
    if (tau >= opt.tau_start) return pi_seed(tau, opt.n_terms).second;
    if (tau < traj.t_back()) throw Error("OutOfLayer", "tau beyond the integrated range");
    return traj.eval(tau, 1).real();
}

PainleveState PainleveLayer::state(double tau) const {
    double a = alpha(tau), da = alpha_prime(tau);
    return {tau, a, da, da / (2.0 * bc().U_star * bc().U_star)};
}

PainleveLayer build_painleve_layer(const ToleranceSpec& tol, const PainleveOptions& opt) {
    PainleveLayer l;
    l.opt = opt;
    l.traj = pi_solve_special(opt.tau_start, tol, opt);
    l.fit = pi_locate_pole(l.traj);
    return l;
}

const PainleveLayer& painleve_layer() {
    static const PainleveLayer layer = build_painleve_layer();
    return layer;
}

bool layer1_valid(double t, double eps, const PainleveLayer& layer) {
    const double tau = (t - bc().t_star) * std::pow(eps, -0.8);
    return (tau - layer.fit.tau0) * std::pow(eps, -0.2) >= 1.0 && tau >= layer.traj.t_back();
}

cplx layer1_eval(double t, double eps, const PainleveLayer& layer) {
    if (!layer1_valid(t, eps, layer)) throw Error("OutOfLayer", "point outside the Painleve layer");
    const double tau = (t - bc().t_star) * std::pow(eps, -0.8);
    auto s = layer.state(tau);
    return bc().U_star + std::pow(eps, 0.4) * s.alpha + cplx(0.0, std::pow(eps, 0.6) * s.beta);
}

}  // namespace slowpass
