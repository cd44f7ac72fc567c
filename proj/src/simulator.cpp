#include "slowpass/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "slowpass/equilibria.hpp"
#include "slowpass/outer.hpp"

namespace slowpass {

namespace {

double golden_max(const std::function<double(double)>& f, double a, double b) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    while (std::abs(b - a) > 1e-13 * std::max(1.0, std::abs(a))) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

std::vector<Spike> find_spikes(const Trajectory& traj, double prominence) {
    std::vector<Spike> out;
    const cplx us = bc().U_star;
    auto dist = [&](double t) { return std::abs(traj.eval(t, 0) - us); };
    // sub-step sampling so a peak between accepted steps is not missed
    std::vector<double> ts;
    for (std::size_t i = 0; i + 1 < traj.size(); ++i)
        for (int j = 0; j < 4; ++j) ts.push_back(traj.t(i) + (traj.t(i + 1) - traj.t(i)) * j / 4.0);
    if (!traj.empty()) ts.push_back(traj.t_back());
    std::vector<double> d(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) d[i] = dist(ts[i]);
    for (std::size_t i = 1; i + 1 < ts.size(); ++i) {
        if (d[i] < prominence || d[i] < d[i - 1] || d[i] < d[i + 1]) continue;
        if (d[i] == d[i - 1]) continue;
        double a = std::min(ts[i - 1], ts[i + 1]), b = std::max(ts[i - 1], ts[i + 1]);
        double tp = golden_max(dist, a, b);
        out.push_back({tp, dist(tp)});
    }
    return out;
}

std::vector<double> find_cycle_crossings(const Trajectory& traj) {
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
        const double a = traj.t(i), b = traj.t(i + 1);
        const cplx ua = traj.y(i, 0), ub = traj.y(i + 1, 0);
        if ((ua.imag() > 0.0) == (ub.imag() > 0.0) || ub.imag() == 0.0) continue;
        // the loop is symmetric about the real axis, so the right-side crossing marks one cycle
        if (0.5 * (ua.real() + ub.real()) < center_root(0.5 * (a + b))) continue;
        out.push_back(brent_root([&](double t) { return traj.eval(t, 0).imag(); }, std::min(a, b), std::max(a, b), 1e-15));
    }
    return out;
}

SimRun simulate(double eps, double C, int seed_order, const ToleranceSpec& tol, const SimOptions& opt) {
    if (!(eps >= 1e-5 && eps <= 1e-1)) throw Error("InvalidInput", "eps must lie in [1e-5, 1e-1]");
    if (!(C > 0.0 && C <= 1.0)) throw Error("InvalidInput", "C must lie in (0, 1]");
    if (seed_order < 0 || seed_order > 2) throw Error("InvalidInput", "seed order must be 0, 1 or 2");
    tol.validate();
    SimRun run;
    run.eps = eps;
    run.C = C;
    run.seed_order = seed_order;
    run.t_start = bc().t_star + C;
    run.t_end = bc().t_star - C;
    auto f = [eps](double t, const CVec& y, CVec& dy) {
        dy[0] = cplx(0.0, -1.0 / eps) * (1.0 + t * y[0] - std::norm(y[0]) * y[0]);
    };
    ToleranceSpec ts = tol;
    ts.max_step = std::min(tol.max_step, opt.max_step_factor * eps);
    run.trajectory = integrate_ivp(f, run.t_start, run.t_end, {outer_eval(run.t_start, eps, seed_order)}, ts);
    run.spikes = find_spikes(run.trajectory, opt.prominence);
    run.crossings = find_cycle_crossings(run.trajectory);
    for (std::size_t i = 0; i + 1 < run.crossings.size(); ++i) {
        const double a = run.crossings[i], b = run.crossings[i + 1];
        if (a < bc().t_star) run.periods.push_back({0.5 * (a + b), a - b});
    }
    return run;
}

std::vector<SimRun> simulate_sweep(const std::vector<double>& eps, double C, int seed_order, const ToleranceSpec& tol,
                                   const SimOptions& opt) {
    std::vector<std::future<SimRun>> jobs;
    for (double e : eps) jobs.push_back(std::async(std::launch::async, [=] { return simulate(e, C, seed_order, tol, opt); }));
    std::vector<SimRun> out;
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

namespace {

Trajectory rephase(const Trajectory& traj, double eps, double sign) {
    Trajectory out(traj.dim());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double t = traj.t(i);
        const cplx ph = std::polar(1.0, sign * t * t / (2.0 * eps));
        CVec s = traj.state(i);
        for (auto& v : s) v *= ph;
        out.push_sample(t, s);
    }
    return out;
}

}  // namespace

Trajectory psi_from_u(const Trajectory& traj, double eps) { return rephase(traj, eps, 1.0); }
Trajectory u_from_psi(const Trajectory& traj, double eps) { return rephase(traj, eps, -1.0); }

std::vector<CycleAction> measure_action(const SimRun& run, int samples_per_cycle) {
    std::vector<CycleAction> out;
    for (std::size_t i = 0; i + 1 < run.crossings.size(); ++i) {
        const double a = run.crossings[i], b = run.crossings[i + 1];
        if (a >= bc().t_star) continue;
        cplx sum = 0.0;
        cplx prev = run.trajectory.eval(a, 0);
        for (int j = 1; j <= samples_per_cycle; ++j) {
            const cplx cur = run.trajectory.eval(a + (b - a) * j / samples_per_cycle, 0);
            sum += cplx(0.0, 1.0) * std::conj(0.5 * (prev + cur)) * (cur - prev);
            prev = cur;
        }
        out.push_back({0.5 * (a + b), sum.real()});
    }
    if (out.size() < 3) throw Error("TooFewCycles", "fewer than three cycles below t_star");
    return out;
}

}  // namespace slowpass
