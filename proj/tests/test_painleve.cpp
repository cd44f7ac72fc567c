#include "doctest.h"
#include "slowpass/equilibria.hpp"
#include "slowpass/outer.hpp"
#include "slowpass/painleve.hpp"

#include <cmath>

using namespace slowpass;

namespace {

double seed_residual(double tau, int n) {
    auto a = pi_seed_coefficients(n);
    double v = 0.0, d2 = 0.0;
    for (int k = 0; k < n; ++k) {
        double p = (1.0 - 5.0 * k) / 2.0;
        v += a[k] * std::pow(tau, p);
        d2 += a[k] * p * (p - 1.0) * std::pow(tau, p - 2.0);
    }
    return d2 + 3 * v * v - tau;
}

}  // namespace

TEST_CASE("pi_seed examples") {
    CHECK(pi_seed(25.0, 1).first == doctest::Approx(2.8867513).epsilon(1e-7));
    CHECK(pi_seed(25.0, 2).first == doctest::Approx(2.8868180).epsilon(1e-7));
    CHECK(std::abs(seed_residual(25.0, 4)) < 1e-8);
    auto a = pi_seed_coefficients(2);
    CHECK(a[1] == doctest::Approx(1.0 / 24.0).epsilon(1e-15));
    CHECK_THROWS_AS(pi_seed(5.0, 3), Error);
}

TEST_CASE("special solution") {
    const auto& L = painleve_layer();
    const auto& tr = L.traj;
    CHECK(has_event(tr, "blowup"));
    SUBCASE("layer ODE residual at interior checkpoints") {
        double worst = 0.0;
        for (double tau = L.fit.tau0 + 0.5; tau < 39.0; tau += 0.37) {
            double a = tr.eval(tau, 0).real();
            double dda = tr.deriv(tau)[1].real();
            worst = std::max(worst, std::abs(dda + 3 * a * a - tau));
        }
        CHECK(worst < 1e-7);
    }
    SUBCASE("tracks the algebraic branch near the start") {
        for (double tau = 35.0; tau <= 40.0; tau += 0.5)
            CHECK(std::abs(tr.eval(tau, 0).real() - std::sqrt(tau / 3)) < 1e-4);
    }
    SUBCASE("diverges to minus infinity at the pole") {
        double prev = 0.0;
        for (double s = 0.3; s > 0.02; s *= 0.8) {
            double a = tr.eval(L.fit.tau0 + s, 0).real();
            CHECK(a < prev);
            CHECK(a * s * s == doctest::Approx(-2.0).epsilon(1e-2));
            prev = a;
        }
    }
    SUBCASE("first-order system with beta = alpha'/(2 U*^2)") {
        const double u = bc().U_star, k = u * u - bc().t_star;
        double worst = 0.0;
        for (double tau = L.fit.tau0 + 0.5; tau < 39.0; tau += 0.41) {
            auto s = L.state(tau);
            double db = L.traj.deriv(tau)[1].real() / (2 * u * u);
            worst = std::max(worst, std::abs(s.alpha_prime + k * s.beta) / (1 + std::abs(s.alpha_prime)));
            worst = std::max(worst, std::abs(db - 3 * u * s.alpha * s.alpha + u * tau) / (1 + std::abs(db)));
        }
        CHECK(std::abs(u * (u * u - bc().t_star) - 1.0) < 1e-14);
        CHECK(worst < 1e-7);
    }
}

TEST_CASE("pole location") {
    const auto& f = painleve_layer().fit;
    CHECK(f.coef.at(-2) == doctest::Approx(-2.0).epsilon(1e-6));
    CHECK(std::abs(f.coef.at(-1)) < 1e-6);
    CHECK(std::abs(f.coef.at(0)) < 1e-6);
    CHECK(std::abs(f.coef.at(1)) < 1e-6);
    CHECK(f.coef.at(2) == doctest::Approx(-f.tau0 / 10).epsilon(1e-6));
    // balancing the s^1 term of the layer equation fixes the cubic coefficient
    CHECK(f.coef.at(3) == doctest::Approx(-1.0 / 6.0).epsilon(1e-6));
    CHECK(f.tau0 == doctest::Approx(-2.7386907436).epsilon(1e-9));
    CHECK(f.a4 == doctest::Approx(0.0540920).epsilon(1e-5));
    CHECK(f.fit_residual < 1e-9);

    SUBCASE("manufactured pole") {
        auto g = [](double tau) { return -2.0 / ((tau - 1) * (tau - 1)) - 0.1 * (tau - 1) * (tau - 1); };
        PoleFitOptions po;
        po.tail = false;
        auto m = locate_pole(g, 1.01, po);
        CHECK(std::abs(m.tau0 - 1.0) < 1e-8);
        CHECK(std::abs(m.a4) < 1e-8);
    }
    SUBCASE("stable under tolerance refinement") {
        auto a = pi_locate_pole(pi_solve_special(40.0, {1e-13, 1e-15}));
        auto b = pi_locate_pole(pi_solve_special(40.0, {1e-14, 1e-16}));
        CHECK(std::abs(a.tau0 - b.tau0) < 1e-7);
        CHECK(std::abs(a.a4 - b.a4) < 1e-7);
    }
    SUBCASE("raw free fit of the trajectory near the pole") {
        const auto& L = painleve_layer();
        std::vector<std::pair<double, double>> pts;
        for (int i = 0; i < 40; ++i) {
            double s = 0.02 + 0.2 * i / 39.0;
            pts.emplace_back(f.tau0 + s, L.traj.eval(f.tau0 + s, 0).real());
        }
        auto lf = fit_laurent(pts, f.tau0, {-2, -1, 0, 1, 2, 3, 4});
        CHECK(lf.coef[-2] == doctest::Approx(-2.0).epsilon(1e-6));
    }
    SUBCASE("recursion coefficients") {
        auto c = pole_laurent(f.tau0, f.a4);
        CHECK(c[2] == -f.tau0 / 10);
        CHECK(c[3] == doctest::Approx(-1.0 / 6.0));
        CHECK(c[5] == 0.0);
    }
}

TEST_CASE("first correction") {
    const auto& L = painleve_layer();
    SUBCASE("linearity of the particular solution") {
        auto q = [](double x) { return 1.0 + 0.1 * x; };
        auto f1 = [](double x) { return std::sin(x); };
        auto f2 = [](double x) { return 2 * std::sin(x); };
        auto y1 = solve_linear_second_order(q, f1, 0.0, 5.0, 0.0, 0.0, {1e-12, 1e-14});
        auto y2 = solve_linear_second_order(q, f2, 0.0, 5.0, 0.0, 0.0, {1e-12, 1e-14});
        for (double x = 0.5; x < 5.0; x += 0.5)
            CHECK(std::abs(y2.eval(x, 0) - 2.0 * y1.eval(x, 0)) < 1e-10);
    }
    SUBCASE("linear growth coefficient at the matching point") {
        for (double tm : {20.0, 40.0}) {
            auto r = pi_correction_solve(L.traj, tm, L.fit);
            double v = r.traj.eval(tm, 2).real() / tm;
            CHECK(std::abs(v - u0_linear_coefficient()) < 1e-3);
        }
        CHECK(u0_linear_coefficient() == doctest::Approx(1.0 / (9 * bc().U_star)).epsilon(1e-6));
    }
    SUBCASE("fourth-order pole content") {
        auto r = pi_correction_solve(L.traj, 40.0, L.fit);
        CHECK(std::abs(r.near_pole.at(-4)) > 1.0);
        CHECK(r.near_pole.at(-4) == doctest::Approx(6 * bc().U_star * bc().U_star).epsilon(1e-4));
    }
    SUBCASE("series seed satisfies the correction equation") {
        const double g0 = 1.0 / (9 * bc().U_star);
        const double tau = 30.0, h = 1e-3;
        auto c = [&](double x) { return correction_seed(x, g0, 6).first; };
        double d2 = (c(tau + h) - 2 * c(tau) + c(tau - h)) / (h * h);
        auto [a, da] = pi_seed(tau, 8);
        double dda = tau - 3 * a * a;
        const double u = bc().U_star, k = 1 / u;
        double b = -u * da, db = -u * dda;
        double res = d2 + 6 * a * c(tau) + k * (a * a * a - a * tau) + b * b + 2 * u * (da * b + a * db);
        CHECK(std::abs(res) < 1e-5);
    }
}

TEST_CASE("layer1_eval") {
    const auto& L = painleve_layer();
    const double eps = 1e-4;
    const double tau = 25.0;
    double t = bc().t_star + tau * std::pow(eps, 0.8);
    auto [a, da] = pi_seed(tau, L.opt.n_terms);
    cplx expect = bc().U_star + std::pow(eps, 0.4) * a +
                  cplx(0, std::pow(eps, 0.6) * da / (2 * bc().U_star * bc().U_star));
    CHECK(std::abs(layer1_eval(t, eps, L) - expect) < 1e-12);
    CHECK(a == doctest::Approx(2.8868).epsilon(1e-4));

    double bad = bc().t_star + (L.fit.tau0 + 0.5 * std::pow(eps, 0.2)) * std::pow(eps, 0.8);
    CHECK_THROWS_AS(layer1_eval(bad, eps, L), Error);

    // approaches the outer limit for fixed t > t_star
    std::vector<double> errs;
    for (double e : {1e-3, 1e-4, 1e-5}) {
        double tt = bc().t_star + 0.01;
        errs.push_back(std::abs(layer1_eval(tt, e, L) - outer_eval(tt, e, 0)));
    }
    CHECK(errs[2] < errs[0]);
}
