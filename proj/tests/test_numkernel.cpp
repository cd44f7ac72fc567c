#include "doctest.h"
#include "slowpass/numkernel.hpp"

#include <cmath>
#include <numbers>

using namespace slowpass;

namespace {

double gaussian_error(double rel) {
    ToleranceSpec tol{rel, rel * 1e-3};
    auto f = [](double t, const CVec& y, CVec& dy) { dy[0] = -2.0 * t * y[0]; };
    auto tr = integrate_ivp(f, 0.0, 2.0, {1.0}, tol);
    return std::abs(tr.y(tr.size() - 1, 0) - std::exp(-4.0));
}

}  // namespace

TEST_CASE("integrate_ivp: rotation reaches -1 at pi") {
    ToleranceSpec tol{1e-12, 1e-14};
    auto f = [](double, const CVec& y, CVec& dy) { dy[0] = cplx(0, 1) * y[0]; };
    auto tr = integrate_ivp(f, 0.0, std::numbers::pi, {1.0}, tol);
    CHECK(std::abs(tr.y(tr.size() - 1, 0) + 1.0) < 1e-10);
    CHECK(tr.t_back() == doctest::Approx(std::numbers::pi).epsilon(1e-15));
}

TEST_CASE("integrate_ivp: y' = y^2 blows up near t = 1") {
    ToleranceSpec tol{1e-12, 1e-14};
    auto f = [](double, const CVec& y, CVec& dy) { dy[0] = y[0] * y[0]; };
    auto tr = integrate_ivp(f, 0.0, 2.0, {1.0}, tol);
    const Event* e = first_event(tr, "blowup");
    REQUIRE(e != nullptr);
    // |y| = 1e6 exactly at t = 1 - 1e-6
    CHECK(e->t == doctest::Approx(1.0 - 1e-6).epsilon(1e-9));
    CHECK(tr.contains(e->t));
}

TEST_CASE("integrate_ivp: Gaussian decay and convergence order") {
    double e1 = gaussian_error(1e-8);
    CHECK(e1 < 1e-8 * 0.02);
    double e2 = gaussian_error(0.5e-8);
    CHECK(e2 <= 0.5 * e1 + 1e-17);
}

TEST_CASE("integrate_ivp: forward then backward returns to the start") {
    ToleranceSpec tol{1e-10, 1e-12};
    auto f = [](double, const CVec& y, CVec& dy) { dy[0] = cplx(0, 1) * y[0]; };
    auto fw = integrate_ivp(f, 0.0, std::numbers::pi, {1.0}, tol);
    auto bw = integrate_ivp(f, std::numbers::pi, 0.0, fw.state(fw.size() - 1), tol);
    CHECK(bw.direction() == -1);
    CHECK(std::abs(bw.y(bw.size() - 1, 0) - 1.0) < 10 * tol.rel);
}

TEST_CASE("integrate_ivp: dense output matches the exact solution between steps") {
    ToleranceSpec tol{1e-12, 1e-14};
    auto f = [](double, const CVec& y, CVec& dy) {
        dy[0] = y[1];
        dy[1] = -y[0];
    };
    auto tr = integrate_ivp(f, 0.0, 10.0, {0.0, 1.0}, tol);
    double worst = 0.0, worst_d = 0.0;
    for (int i = 1; i < 500; ++i) {
        double t = 10.0 * i / 500.0 + 1e-3;
        if (t > 10.0) break;
        worst = std::max(worst, std::abs(tr.eval(t, 0) - std::sin(t)));
        worst_d = std::max(worst_d, std::abs(tr.deriv(t)[0] - std::cos(t)));
    }
    CHECK(worst < 1e-10);
    CHECK(worst_d < 1e-9);
}

TEST_CASE("integrate_ivp: events are located on the continuous extension") {
    ToleranceSpec tol{1e-12, 1e-14};
    auto f = [](double, const CVec& y, CVec& dy) { dy[0] = cplx(0, 1) * y[0]; };
    IvpOptions opt;
    opt.events.push_back({"up", [](double, const CVec& y) { return y[0].imag(); }, +1, false});
    auto tr = integrate_ivp(f, 0.0, 13.0, {cplx(0, -1)}, tol, opt);
    // Im(e^{it} * -i) = -cos t rises through zero at pi/2 + 2 pi k
    REQUIRE(tr.events.size() == 2);
    CHECK(tr.events[0].t == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
    CHECK(tr.events[1].t == doctest::Approx(2.5 * std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("integrate_ivp: error kinds") {
    auto bad = [](double, const CVec&, CVec& dy) { dy[0] = std::nan(""); };
    try {
        integrate_ivp(bad, 0.0, 1.0, {1.0}, {});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == "NonFiniteField");
    }
    ToleranceSpec tight{1e-10, 1e-12, 1.0, 0.5};
    auto stiff = [](double, const CVec& y, CVec& dy) { dy[0] = -1e6 * y[0]; };
    try {
        integrate_ivp(stiff, 0.0, 1.0, {1.0}, tight);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == "StepUnderflow");
    }
    CHECK_THROWS_AS(integrate_ivp(stiff, 1.0, 1.0, {1.0}, {}), Error);
}

TEST_CASE("Trajectory: monotone samples enforced") {
    Trajectory tr(1);
    tr.push_sample(0.0, {1.0});
    tr.push_sample(1.0, {2.0});
    CHECK_THROWS_AS(tr.push_sample(0.5, {3.0}), Error);
    CHECK(tr.direction() == 1);
}

TEST_CASE("adaptive_quad examples") {
    CHECK(adaptive_quad([](double x) { return x * x; }, 0.0, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(adaptive_quad([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0) == doctest::Approx(2.0).epsilon(1e-12));
    double a = std::cbrt(0.25);
    double omega = adaptive_quad([](double y) { return 2.0 / std::sqrt(4 * y * y * y - 1.0); }, a,
                                 std::numeric_limits<double>::infinity(), 1e-9);
    // Gamma(1/3)^3 / (2 pi)
    CHECK(omega == doctest::Approx(std::pow(std::tgamma(1.0 / 3.0), 3) / (2 * std::numbers::pi)).epsilon(1e-8));
    cplx z = adaptive_quad_c([](double x) { return std::exp(cplx(0, x)); }, 0.0, std::numbers::pi);
    CHECK(std::abs(z - cplx(0, 2)) < 1e-12);
}

TEST_CASE("poly_roots examples") {
    auto r = poly_roots({-1.0, -2.0, 0.0, 1.0}, RootKind::RealOnly);
    REQUIRE(r.size() == 3);
    CHECK(r[0].value.real() == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(r[1].value.real() == doctest::Approx((1 - std::sqrt(5.0)) / 2).epsilon(1e-14));
    CHECK(r[2].value.real() == doctest::Approx((1 + std::sqrt(5.0)) / 2).epsilon(1e-14));

    CHECK(poly_roots({1.0, 0.0, 1.0}, RootKind::RealOnly).empty());
    CHECK(poly_roots({1.0, 0.0, 1.0}, RootKind::All).size() == 2);

    auto d = poly_roots({2.0, -3.0, 0.0, 1.0}, RootKind::RealOnly);
    REQUIRE(d.size() == 2);
    CHECK(d[0].value.real() == doctest::Approx(-2.0).epsilon(1e-13));
    CHECK(d[0].multiplicity == 1);
    CHECK(d[1].value.real() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(d[1].multiplicity == 2);

    CHECK_THROWS_AS(poly_roots({0.0, 0.0}), Error);
}

TEST_CASE("poly_roots: expanded cubic products recover their roots") {
    const double grid[] = {-9.5, -6.25, -3.0, -1.1, 0.0, 0.7, 2.3, 4.9, 8.8, 10.0};
    for (int i = 0; i < 10; ++i)
        for (int j = i + 1; j < 10; ++j)
            for (int k = j + 1; k < 10; ++k) {
                double r1 = grid[i], r2 = grid[j], r3 = grid[k];
                std::vector<double> c{-r1 * r2 * r3, r1 * r2 + r1 * r3 + r2 * r3, -(r1 + r2 + r3), 1.0};
                auto roots = poly_roots(c, RootKind::RealOnly);
                REQUIRE(roots.size() == 3);
                CHECK(std::abs(roots[0].value.real() - r1) < 1e-10);
                CHECK(std::abs(roots[1].value.real() - r2) < 1e-10);
                CHECK(std::abs(roots[2].value.real() - r3) < 1e-10);
            }
}

TEST_CASE("fit_laurent examples") {
    std::vector<std::pair<double, double>> s;
    for (int i = 0; i <= 8; ++i) {
        double x = 0.1 + 0.05 * i;
        s.emplace_back(x, 1.0 / (x * x));
    }
    auto f = fit_laurent(s, 0.0, {-2});
    CHECK(f.coef[-2] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(f.residual < 1e-12);

    s.clear();
    for (int i = 0; i < 20; ++i) {
        double x = 0.1 + 0.04 * i;
        s.emplace_back(x, -2.0 / (x * x) + 3.0 * std::pow(x, 4));
    }
    auto g = fit_laurent(s, 0.0, {-2, 4});
    CHECK(g.coef[-2] == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(g.coef[4] == doctest::Approx(3.0).epsilon(1e-10));

    CHECK_THROWS_AS(fit_laurent(s, 0.0, {-2, -2}), Error);
    CHECK_THROWS_AS(fit_laurent({{1.0, 1.0}}, 0.0, {0}), Error);
}
