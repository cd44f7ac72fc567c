#include "doctest.h"
#include "slowpass/averaged.hpp"
#include "slowpass/equilibria.hpp"

#include <cmath>
#include <numbers>

using namespace slowpass;

namespace {

double ts() { return bc().t_star; }

double level_residual(const OrbitCurve& c) {
    double worst = 0.0;
    for (auto z : c.points) worst = std::max(worst, std::abs(frozen_energy(z, c.t) - c.E));
    return worst;
}

}  // namespace

TEST_CASE("gamma_curve") {
    SUBCASE("loop through the corner at the coalescence point") {
        auto c = gamma_curve(ts(), bc().E_star);
        CHECK(c.points.size() >= 513);
        CHECK(level_residual(c) < 1e-8);
        double closest = 1e9;
        for (auto z : c.points) closest = std::min(closest, std::abs(z - bc().U_star));
        CHECK(closest < 1e-4);
    }
    SUBCASE("small near-elliptic loop around the center") {
        const double t = 1.0, cen = center_root(t);
        const double E = frozen_energy(cen, t) + 1e-6;
        auto c = gamma_curve(t, E);
        CHECK(level_residual(c) < 1e-8);
        CHECK(std::abs(c.points.front() - c.points.back()) < 1e-14);
        double rmax = 0.0;
        for (auto z : c.points) rmax = std::max(rmax, std::abs(z - cen));
        CHECK(rmax < 1e-2);
    }
    CHECK_THROWS_AS(gamma_curve(1.0, frozen_energy(center_root(1.0), 1.0) - 0.1), Error);
}

TEST_CASE("action_I: two methods agree and degenerate loops vanish") {
    const double t = 1.2;
    CHECK(action_I(t, frozen_energy(center_root(t), t), ActionMethod::Polar) == 0.0);
    const double sig = sigma_star();
    CHECK(std::abs(action_I(ts(), bc().E_star, ActionMethod::Polar) - sig) < 1e-6);
    for (double dt : {0.1, 0.3, 0.6, 0.9}) {
        const double tt = ts() - dt;
        const double E0 = solve_E_of_t(tt, sig);
        for (double dE : {-0.2, 0.0, 0.3}) {
            const double a = action_I(tt, E0 + dE, ActionMethod::Segments);
            const double b = action_I(tt, E0 + dE, ActionMethod::Polar);
            CHECK(std::abs(a - b) < 1e-6);
        }
    }
    // a unit-speed-free check of the geometric meaning: the action grows like period * dE
    const double Ec = frozen_energy(center_root(t), t);
    const double small = action_I(t, Ec + 1e-4);
    CHECK(small / 1e-4 == doctest::Approx(frozen_period(t, Ec + 0.5e-4)).epsilon(1e-3));
}

TEST_CASE("dI/dE equals the frozen period") {
    for (double dt : {0.05, 0.3, 0.8}) {
        const double t = ts() - dt;
        const double E = solve_E_of_t(t, sigma_star());
        auto d = energy_derivatives(t, E);
        CHECK(d.dI == doctest::Approx(frozen_period(t, E)).epsilon(1e-6));
    }
}

TEST_CASE("quartic_roots") {
    auto q = quartic_roots(ts() - 0.2, solve_E_of_t(ts() - 0.2, sigma_star()));
    CHECK(q.vieta_residual < 1e-10);
    CHECK(q.x_minus <= q.x_plus);

    auto c = quartic_roots(ts(), bc().E_star);
    CHECK(std::abs(c.x_minus - bc().U_star) < 1e-4);
    CHECK(std::abs(c.m - bc().U_star) < 1e-4);
    CHECK(std::abs(c.n) < 1e-4);
    CHECK(std::abs(c.x_plus - bc().x_plus_star) < 1e-10);
    CHECK(c.vieta_residual < 1e-10);

    // left root departs from U_star like sqrt(-mu)
    std::vector<double> lx, ly;
    for (double mu : {-1e-3, -1e-4, -1e-5, -1e-6}) {
        auto r = quartic_roots(ts() + mu, solve_E_of_t(ts() + mu, sigma_star()));
        CHECK(r.vieta_residual < 1e-10);
        lx.push_back(std::log(-mu));
        ly.push_back(std::log(std::abs(r.x_minus - bc().U_star)));
    }
    CHECK(linear_slope(lx, ly) == doctest::Approx(0.5).epsilon(0.2));

    CHECK_THROWS_AS(quartic_roots(3.0, frozen_energy(saddle_root(3.0), 3.0) + 0.01), Error);
}

TEST_CASE("solve_E_of_t") {
    const double t = ts() - 0.4;
    const double E0 = 1.3;
    const double sig = action_I(t, E0);
    const double E = solve_E_of_t(t, sig);
    CHECK(std::abs(E - E0) < 1e-8);
    CHECK(std::abs(action_I(t, E) - sig) < 1e-8);
    double prev = -1e9;
    for (double s : {5.0, 10.0, 20.0, 30.0}) {
        double e = solve_E_of_t(t, s);
        CHECK(e > prev);
        prev = e;
    }
    CHECK_THROWS_AS(solve_E_of_t(ts() + 0.1, sigma_star()), Error);
    CHECK_THROWS_AS(solve_E_of_t(t, -1.0), Error);
}

TEST_CASE("period integral and rate") {
    const double t = ts() - 0.25;
    const double E = solve_E_of_t(t, sigma_star());
    const cplx K = period_integral_K(t, E);
    CHECK(std::abs(K.real()) < 1e-8 * std::abs(K));
    CHECK(std::abs(K) == doctest::Approx(frozen_period(t, E)).epsilon(1e-8));
    CHECK(s_prime(t, E, 2.0) == doctest::Approx(2.0 * s_prime(t, E, 1.0)).epsilon(1e-12));
    CHECK(s_prime(t, E) > 0.0);
}

TEST_CASE("leader_orbit") {
    const double t = ts() - 0.3;
    const double E = solve_E_of_t(t, sigma_star());
    const double T = 1.0;
    auto lo = leader_orbit(t, E, T);
    REQUIRE(lo.complete);
    CHECK(std::abs(lo.traj.eval(lo.traj.t_back(), 0) - lo.u0) < 1e-6);
    CHECK(lo.u0.imag() == 0.0);
    double worst_level = 0.0, worst_sym = 0.0;
    for (int j = 0; j <= 100; ++j) {
        const double t1 = T * j / 200.0;
        const cplx a = lo.eval(t1), b = lo.eval(-t1);
        worst_level = std::max(worst_level, std::abs(frozen_energy(a, t) - E));
        worst_sym = std::max({worst_sym, std::abs(a.real() - b.real()), std::abs(a.imag() + b.imag())});
    }
    CHECK(worst_level < 1e-8);
    CHECK(worst_sym < 1e-6);
    // the orbit sweeps the level curve
    auto c = gamma_curve(t, E, 256);
    double worst_gap = 0.0;
    for (auto z : c.points) {
        double best = 1e9;
        for (int j = 0; j < 4000; ++j) best = std::min(best, std::abs(lo.eval(T * j / 4000.0) - z));
        worst_gap = std::max(worst_gap, best);
    }
    CHECK(worst_gap < 5e-3);
}

TEST_CASE("radicand_select picks the cubic that reproduces the frozen orbit") {
    for (double dt : {0.2, 0.6}) {
        const double t = ts() - dt;
        auto rc = radicand_select(t, solve_E_of_t(t, sigma_star()));
        CHECK(rc.selected == Radicand::TwoCubic);
        CHECK(rc.mismatch_two < 1e-6);
        CHECK(rc.mismatch_three > 1e-2);
    }
}

TEST_CASE("degeneration near the coalescence point") {
    std::vector<double> lx, lk, ls;
    for (double mu : {-1e-2, -1e-3, -1e-4}) {
        auto d = degeneration_scales(mu);
        lx.push_back(std::log(-mu));
        lk.push_back(std::log(std::abs(d.K)));
        ls.push_back(std::log(d.S_prime));
        CHECK(d.delta / mu < 0.0);
    }
    // K blows up and S' vanishes as the loop reaches the corner
    CHECK(linear_slope(lx, lk) < -0.15);
    CHECK(linear_slope(lx, ls) > 0.15);
    CHECK_THROWS_AS(degeneration_scales(1e-3), Error);
}

TEST_CASE("phase_phi") {
    std::vector<double> grid{ts() - 0.1, ts() - 0.4, ts() - 0.8};
    for (double v : phase_phi(grid, 0.7, 0.0)) CHECK(v == 0.7);
    auto a = phase_phi(grid, 0.0, 1.0), b = phase_phi(grid, 0.0, 2.0);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(b[i] == doctest::Approx(2.0 * a[i]).epsilon(1e-12));
    // the tabulated phase agrees with direct integration of the rate
    const double t0 = ts() - 0.3, t1 = ts() - 0.5;
    const double direct = adaptive_quad([](double t) { return phase_rate(t, 1.0); }, t0, t1, 1e-7);
    auto p = phase_phi({t0, t1}, 0.0, 1.0);
    CHECK(p[1] - p[0] == doctest::Approx(direct).epsilon(1e-4));
}

TEST_CASE("modulation table") {
    const auto& tab = modulation_table();
    const double t = ts() - 0.37;
    CHECK(tab.E(t) == doctest::Approx(solve_E_of_t(t, sigma_star())).epsilon(1e-7));
    const double h = 1e-4;
    const double dS = (tab.S(t + h) - tab.S(t - h)) / (2 * h);
    CHECK(dS == doctest::Approx(s_prime(t, tab.E(t))).epsilon(1e-4));
    auto rows = tab.rows();
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].t < rows[i - 1].t);
    CHECK_THROWS_AS(tab.E(ts() + 0.1), Error);
}

TEST_CASE("averaged_eval") {
    const double eps = 1e-3;
    const double t0 = ts() - 0.3;
    for (int j = 0; j < 20; ++j) {
        const double t = t0 - j * 3.7e-4;
        const cplx u = averaged_eval(t, eps, 0.3, 0.2);
        CHECK(std::abs(frozen_energy(u, t) - modulation_table().E(t)) < 1e-6);
    }
    // local oscillation period from upward crossings of the real axis
    const double Sp = s_prime(t0, modulation_table().E(t0));
    const double expect = eps / Sp;
    std::vector<double> ups;
    const int n = 4000;
    const double span = 6 * expect, dt = span / n;
    double prev_t = t0, prev = averaged_eval(t0, eps).imag();
    for (int j = 1; j <= n; ++j) {
        const double t = t0 - j * dt;
        const double v = averaged_eval(t, eps).imag();
        // decreasing t runs the fast phase backwards, so look for falling crossings
        if (prev > 0.0 && v <= 0.0) ups.push_back(prev_t - dt * prev / (prev - v));
        prev = v;
        prev_t = t;
    }
    REQUIRE(ups.size() >= 3);
    const double measured = (ups.front() - ups.back()) / (ups.size() - 1);
    CHECK(measured == doctest::Approx(expect).epsilon(0.01));

    CHECK_THROWS_AS(averaged_eval(ts() - std::pow(eps, 2.0 / 3.0), eps), Error);
    CHECK(!averaged_valid(ts() - std::pow(eps, 2.0 / 3.0), eps));
    CHECK(averaged_valid(ts() - 0.3, eps));
}
