#include "doctest.h"
#include "slowpass/equilibria.hpp"
#include "slowpass/matcher.hpp"
#include "slowpass/painleve.hpp"

#include <cmath>

using namespace slowpass;

namespace {

double ts() { return bc().t_star; }

const std::vector<SimRun>& runs() {
    static const std::vector<SimRun> r = simulate_sweep({1e-2, 3e-3, 1e-3, 3e-4, 1e-4}, 0.5, 2);
    return r;
}

const SimRun& run_at(double eps) {
    for (const auto& r : runs())
        if (r.eps == eps) return r;
    throw Error("InvalidInput", "eps not in the grid");
}

ScalingFit outer_fit(int order) {
    std::vector<MatchReport> reps;
    for (const auto& r : runs())
        reps.push_back(overlap_error(outer_layer(r.eps, order), simulation_layer(r), ts() + 0.3, ts() + 0.5, r.eps));
    return order_fit(reps);
}

std::vector<CascadeState> schedule(double eps) {
    ScheduleOptions so;
    so.strict = false;
    return spike_schedule(eps, painleve_layer().fit, 6, so);
}

}  // namespace

TEST_CASE("overlap_error") {
    auto a = outer_layer(1e-3, 2);
    auto rep = overlap_error(a, a, ts() + 0.3, ts() + 0.5, 1e-3, 50);
    CHECK(rep.sup_error == 0.0);
    CHECK(rep.rms_error == 0.0);
    CHECK(rep.samples == 50);
    CHECK_THROWS_AS(overlap_error(a, a, ts() + 0.5, ts() + 0.3, 1e-3), Error);
    // the outer layer is not valid at the coalescence point
    CHECK_THROWS_AS(overlap_error(a, a, ts(), ts() + 0.3, 1e-3), Error);
}

TEST_CASE("order_fit") {
    std::vector<MatchReport> reps;
    for (double e : {1e-2, 1e-3, 1e-4, 1e-5}) reps.push_back({"a", "b", 0.0, 1.0, e, 3.0 * e * e, 0.0, 10});
    auto f = order_fit(reps);
    CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(f.residual < 1e-10);
    CHECK_THROWS_AS(order_fit({reps[0], reps[1]}), Error);
    auto mixed = reps;
    mixed[2].t_hi = 2.0;
    CHECK_THROWS_AS(order_fit(mixed), Error);
}

TEST_CASE("outer truncations against direct numerics") {
    CHECK(outer_fit(0).slope == doctest::Approx(1.0).epsilon(0.3));
    CHECK(outer_fit(1).slope == doctest::Approx(2.0).epsilon(0.15));
    CHECK(outer_fit(2).slope == doctest::Approx(3.0).epsilon(0.1));
}

TEST_CASE("Painleve layer against direct numerics") {
    std::vector<double> eps, sup;
    for (const auto& r : runs()) {
        const double s = std::pow(r.eps, 0.8);
        auto rep = overlap_error(painleve_layer_eval(r.eps), simulation_layer(r), ts() + 5 * s, ts() + 15 * s, r.eps);
        eps.push_back(r.eps);
        sup.push_back(rep.sup_error);
    }
    CHECK(fit_power_law("layer1", eps, sup).slope > 0.3);
}

TEST_CASE("spike_alignment") {
    const auto& r = run_at(1e-4);
    auto al = spike_alignment(r, schedule(r.eps));
    REQUIRE(al.size() == 6);
    for (const auto& a : al) {
        CHECK(a.rel_error < 0.1);
        CHECK(a.amplitude_rel_error < 0.1);
    }
    std::vector<double> eps, off;
    for (const auto& s : runs()) {
        eps.push_back(s.eps);
        off.push_back(ts() - s.spikes.at(0).t);
    }
    CHECK(fit_power_law("offset", eps, off).slope == doctest::Approx(0.8).epsilon(0.05 / 0.8));

    SimRun empty;
    empty.eps = 1e-4;
    CHECK_THROWS_AS(spike_alignment(empty, schedule(1e-4)), Error);
    CHECK_THROWS_AS(spike_alignment(r, schedule(1e-3)), Error);
}

TEST_CASE("spike alignment improves from eps 1e-3 to 1e-4" * doctest::may_fail()) {
    auto coarse = spike_alignment(run_at(1e-3), schedule(1e-3), 3);
    auto fine = spike_alignment(run_at(1e-4), schedule(1e-4), 3);
    for (std::size_t k = 0; k < 4; ++k) CHECK(fine[k].rel_error <= coarse[k].rel_error);
}

TEST_CASE("composite_solution") {
    std::vector<double> grid;
    for (int i = 0; i <= 2000; ++i) grid.push_back(ts() + 0.5 - 1.0 * i / 2000.0);
    auto c3 = composite_solution(1e-3, grid, 0.0, 0.0);
    REQUIRE(c3.tags.size() == grid.size());
    CHECK(c3.tags.front() == LayerTag::Outer);
    CHECK(c3.tags.back() == LayerTag::Averaged);
    bool seen_sep = false, seen_mid = false, seen_pain = false;
    for (auto t : c3.tags) {
        seen_sep |= t == LayerTag::Separatrix;
        seen_mid |= t == LayerTag::Intermediate;
        seen_pain |= t == LayerTag::Painleve;
    }
    CHECK(seen_sep);
    CHECK(seen_mid);
    CHECK(seen_pain);
    // the deep collar is not covered by any window; reported, not fatal
    CHECK(c3.uncovered > 0);
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (c3.tags[i] == LayerTag::None) CHECK(std::isnan(c3.u[i].real()));
    CHECK(to_string(LayerTag::Intermediate) == "intermediate");

    // switch jumps shrink with eps
    std::vector<double> eps, worst;
    for (double e : {1e-3, 3e-4, 1e-4}) {
        auto c = composite_solution(e, grid, 0.0, 0.0);
        double w = 0.0;
        for (const auto& j : c.jumps) w = std::max(w, j.jump);
        eps.push_back(e);
        worst.push_back(w);
    }
    CHECK(fit_power_law("jumps", eps, worst).slope > 0.0);
    CHECK_THROWS_AS(composite_solution(1e-3, {ts() + 2.0}, 0.0, 0.0), Error);
}
