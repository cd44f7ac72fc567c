#include "slowpass/wp_cascade.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "slowpass/equilibria.hpp"
#include "slowpass/painleve.hpp"
#include "slowpass/separatrix.hpp"

namespace slowpass {

namespace {

constexpr int kTerms = 40;

std::vector<double> laurent_coefficients(double g2, double g3) {
    std::vector<double> c(kTerms + 1, 0.0);
    c[2] = g2 / 20.0;
    c[3] = g3 / 28.0;
    for (int k = 4; k <= kTerms; ++k) {
        double s = 0.0;
        for (int m = 2; m <= k - 2; ++m) s += c[m] * c[k - m];
        c[k] = 3.0 * s / ((2.0 * k + 1.0) * (k - 3.0));
    }
    return c;
}

WpValue series(const std::vector<double>& c, double x) {
    WpValue v{1.0 / (x * x), -2.0 / (x * x * x), 1.0 / x};
    double x2 = x * x, pw = x2;  // x^{2k-2}
    for (int k = 2; k <= kTerms; ++k) {
        v.p += c[k] * pw;
        v.p_prime += c[k] * (2.0 * k - 2.0) * pw / x;
        v.zeta -= c[k] * pw * x / (2.0 * k - 1.0);
        pw *= x2;
    }
    return v;
}

struct Table {
    double g2, g3, Omega, xs, eta;
    std::vector<double> c;
    Trajectory tr;
};

std::shared_ptr<const Table> build_table(double g2, double g3) {
    auto t = std::make_shared<Table>();
    t->g2 = g2;
    t->g3 = g3;
    t->Omega = wp_real_period(g2, g3);
    t->c = laurent_coefficients(g2, g3);
    double xs = 0.25 * t->Omega;
    for (int it = 0; it < 60; ++it) {
        double last = std::abs(t->c[kTerms]) * std::pow(xs, 2.0 * kTerms - 2.0);
        if (last * xs * xs < 1e-18 && std::isfinite(last)) break;
        xs *= 0.7;
    }
    t->xs = xs;
    auto s = series(t->c, xs);
    auto f = [g2](double, const CVec& y, CVec& dy) {
        dy[0] = y[1];
        dy[1] = 6.0 * y[0] * y[0] - 0.5 * g2;
        dy[2] = -y[0];
    };
    IvpOptions io;
    io.ceiling = 1e300;
    // capped steps keep the dense interpolant at integration accuracy
    t->tr = integrate_ivp(f, xs, 0.5 * t->Omega, {s.p, s.p_prime, s.zeta}, {1e-14, 1e-16, t->Omega / 400}, io);
    t->eta = t->tr.eval(t->tr.t_back(), 2).real();
    return t;
}

std::shared_ptr<const Table> table_for(double g2, double g3) {
    static std::mutex mu;
    static std::map<std::pair<double, double>, std::shared_ptr<const Table>> cache;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find({g2, g3});
        if (it != cache.end()) return it->second;
    }
    auto t = build_table(g2, g3);
    std::lock_guard<std::mutex> lock(mu);
    if (cache.size() > 512) cache.clear();
    cache[{g2, g3}] = t;
    return t;
}

}  // namespace

WpValue wp_eval(double x, double g2, double g3) {
    if (g2 == 0.0 && g3 == 0.0) {
        if (std::abs(x) < 1e-8) throw Error("NearPole", "argument at a lattice point");
        return {1.0 / (x * x), -2.0 / (x * x * x), 1.0 / x};
    }
    auto t = table_for(g2, g3);
    const double n = std::round(x / t->Omega);
    const double r = x - n * t->Omega;
    if (std::abs(r) < 1e-8) throw Error("NearPole", "argument at a lattice point");
    const double y = std::abs(r);
    WpValue v;
    if (y <= t->xs) {
        v = series(t->c, y);
    } else {
        auto s = t->tr.eval(std::min(y, t->tr.t_back()));
        v = {s[0].real(), s[1].real(), s[2].real()};
    }
    if (r < 0.0) {
        v.p_prime = -v.p_prime;
        v.zeta = -v.zeta;
    }
    v.zeta += 2.0 * n * t->eta;
    return v;
}

double wp_e1(double g2, double g3) {
    auto roots = poly_roots({-g3, -g2, 0.0, 4.0}, RootKind::RealOnly, RootOptions{0.0});
    if (roots.empty()) throw Error("NoRealRoot", "cubic has no real root");
    return roots.back().value.real();
}

double wp_real_period(double g2, double g3) {
    const double e1 = wp_e1(g2, g3);
    // 4y^3 - g2 y - g3 = 4 (y - e1) Q(y); with y = e1 + v^2 the integrand is 2 / sqrt(Q)
    auto Q = [=](double v) {
        double y = e1 + v * v;
        return y * y + e1 * y + e1 * e1 - 0.25 * g2;
    };
    if (!(Q(0.0) > 1e-14 * std::max(1.0, e1 * e1))) throw Error("NoRealRoot", "largest root is degenerate");
    return adaptive_quad([&](double v) { return 2.0 / std::sqrt(Q(v)); }, 0.0,
                         std::numeric_limits<double>::infinity(), 1e-14);
}

double wp_period_from_ode(double g2, double g3) {
    auto c = laurent_coefficients(g2, g3);
    // start well away from the pole: the invariant error is absolute and scales with p'^2
    double xs = 0.4 / std::max({1.0, std::pow(std::abs(g2), 0.25), std::pow(std::abs(g3), 1.0 / 6.0)});
    while (std::abs(c[kTerms]) * std::pow(xs, 2.0 * kTerms) > 1e-18) xs *= 0.7;
    auto s = series(c, xs);
    auto f = [g2](double, const CVec& y, CVec& dy) {
        dy[0] = y[1];
        dy[1] = 6.0 * y[0] * y[0] - 0.5 * g2;
    };
    IvpOptions io;
    io.ceiling = 1e300;
    io.events.push_back({"turn", [](double, const CVec& y) { return y[1].real(); }, +1, true});
    auto tr = integrate_ivp(f, xs, 1e3, {s.p, s.p_prime}, {1e-14, 1e-16, 1e-2}, io);
    const Event* e = first_event(tr, "turn");
    if (!e) throw Error("NoRealRoot", "p' never vanished");
    return 2.0 * e->t;
}

WpParams wp_params(double g2, double g3) { return {g2, g3, wp_real_period(g2, g3)}; }

VariationalPair wp_variational_pair(double T, double g3) {
    auto c = laurent_coefficients(0.0, g3);
    // A2 = sum d_m T^m from m = 4
    const int M = 4 + 2 * kTerms;
    std::vector<double> d(M + 1, 0.0);
    d[4] = 0.5;
    for (int m = 6; m <= M; m += 2) {
        double s = 0.0;
        for (int k = 2; 2 * k <= m - 4 && k <= kTerms; ++k) s += c[k] * d[m - 2 * k];
        d[m] = 12.0 * s / (m * (m - 1.0) - 12.0);
    }
    auto a2_series = [&](double x, double& v, double& dv) {
        v = dv = 0.0;
        for (int m = 4; m <= M; m += 2) {
            v += d[m] * std::pow(x, m);
            dv += m * d[m] * std::pow(x, m - 1);
        }
    };
    const double Om = wp_real_period(0.0, g3);
    const double Ts = 0.1 * Om;
    auto w = wp_eval(T, 0.0, g3);
    VariationalPair vp{};
    vp.A1 = 0.25 * w.p_prime;
    vp.dA1 = 1.5 * w.p * w.p;
    if (std::abs(T) <= Ts) {
        a2_series(T, vp.A2, vp.dA2);
        return vp;
    }
    const double T0 = T > 0 ? Ts : -Ts;
    double v0, dv0;
    a2_series(T0, v0, dv0);
    auto f = [g3](double x, const CVec& y, CVec& dy) {
        dy[0] = y[1];
        dy[1] = 12.0 * wp_eval(x, 0.0, g3).p * y[0];
    };
    auto tr = integrate_ivp(f, T0, T, {v0, dv0}, {1e-13, 1e-15});
    vp.A2 = tr.y(tr.size() - 1, 0).real();
    vp.dA2 = tr.y(tr.size() - 1, 1).real();
    return vp;
}

double g3_energy_increment() {
    static const double inc = -14.0 * jump_integrals(2, 0.0).Y;
    return inc;
}

double g3_sequence(double a4, int k, CascadeLaw law) {
    if (k < 1) throw Error("InvalidInput", "k >= 1");
    if (law == CascadeLaw::Printed) return (a4 + 0.5 * std::numbers::pi * (k - 1)) / 56.0;
    return g3_energy_increment() * k;
}

double omega_k(double a4, int k, CascadeLaw law) {
    // Omega(0, g3) = g3^{-1/6} Omega(0, 1)
    static const double base = wp_real_period(0.0, 1.0);
    return base * std::pow(g3_sequence(a4, k, law), -1.0 / 6.0);
}

double P_k(double a4, int k, CascadeLaw law) {
    double s = 0.0;
    for (int j = 1; j <= k; ++j) s += omega_k(a4, j, law);
    return s;
}

double JumpLedger::x_sum(int k) const {
    double s = 0.0;
    for (const auto& r : records)
        if (r.k <= k) s += r.x_plus;
    return s;
}

JumpLedger jump_ledger_step(const JumpLedger& ledger, int k) {
    if (static_cast<int>(ledger.records.size()) != k - 1) throw Error("InvalidInput", "ledger must hold records 1..k-1");
    JumpLedger out = ledger;
    JumpRecord r{};
    r.k = k;
    r.g3 = g3_sequence(ledger.a4, k, ledger.law);
    r.X_plus = 0.0;
    if (ledger.law == CascadeLaw::Printed) {
        r.Y_plus = 56.0 * r.g3;
        r.Y_minus = r.Y_plus + 0.5 * std::numbers::pi;
    } else {
        r.Y_plus = -r.g3 / 14.0;
        r.Y_minus = r.Y_plus - g3_energy_increment() / 14.0;
    }
    const double om = wp_real_period(0.0, r.g3);
    r.x_plus = ledger.track_x ? 28.0 * ledger.tau0 / (3.0 * r.g3) * wp_eval(0.5 * om, 0.0, r.g3).zeta : 0.0;
    out.records.push_back(r);
    return out;
}

double lambda_k(double eps, int k, const JumpLedger& ledger) {
    double s = P_k(ledger.a4, k, ledger.law);
    if (ledger.track_x && static_cast<int>(ledger.records.size()) >= k) s += 0.25 * ledger.x_sum(k);
    return std::pow(eps, 1.0 / 6.0) * s;
}

double intermediate_g2(int k, double eps, double a4, const IntermediateOptions& opt) {
    JumpLedger l;
    l.law = opt.law;
    l.a4 = a4;
    l.track_x = false;
    double lam = lambda_k(eps, k, l);
    return lam >= opt.lambda_threshold ? lam : 0.0;
}

std::pair<double, double> intermediate_leader(double T, int k, double eps, double a4, const IntermediateOptions& opt) {
    const double g3 = g3_sequence(a4, k, opt.law);
    const double g2 = intermediate_g2(k, eps, a4, opt);
    const double om = wp_real_period(g2, g3);
    if (!(T > -om + opt.pole_margin && T < -opt.pole_margin))
        throw Error("OutOfWindow", "T must lie strictly between the poles at -Omega and 0");
    auto w = wp_eval(T, g2, g3);
    const double u = bc().U_star;
    return {-2.0 * w.p, -2.0 * w.p_prime / (2.0 * u * u)};
}

int cascade_validity_bound(double eps) { return static_cast<int>(std::floor(std::pow(eps, -1.0 / 7.0))); }

std::vector<CascadeState> spike_schedule(double eps, const PoleFit& fit, int K, const ScheduleOptions& opt) {
    if (K < 0) throw Error("InvalidInput", "K >= 0");
    if (opt.strict && K > cascade_validity_bound(eps))
        throw Error("BeyondValidity", "K exceeds the cascade validity bound eps^{-1/7}");
    const double thr = opt.lambda_threshold < 0.0 ? std::pow(eps, -2.0 / 3.0) : opt.lambda_threshold;
    std::vector<CascadeState> out;
    // entry 0 is the spike at the Painleve pole
    out.push_back({0, 0.0, 0.0, 0.0, 0.0, bc().t_star + std::pow(eps, 0.8) * fit.tau0, false});
    double P = 0.0, t = out[0].t_spike;
    for (int k = 1; k <= K; ++k) {
        CascadeState s{};
        s.k = k;
        s.g3_k = g3_sequence(fit.a4, k, opt.law);
        s.Omega_k = omega_k(fit.a4, k, opt.law);
        P += s.Omega_k;
        s.P_k = P;
        s.lambda_k = std::pow(eps, 1.0 / 6.0) * P;
        t -= std::pow(eps, 5.0 / 6.0) * s.Omega_k;
        s.t_spike = t;
        s.lambda_regime = s.lambda_k >= thr;
        out.push_back(s);
    }
    return out;
}

}  // namespace slowpass
