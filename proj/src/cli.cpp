#include "slowpass/cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "slowpass/averaged.hpp"
#include "slowpass/equilibria.hpp"
#include "slowpass/matcher.hpp"
#include "slowpass/outer.hpp"
#include "slowpass/painleve.hpp"
#include "slowpass/separatrix.hpp"
#include "slowpass/simulator.hpp"
#include "slowpass/wp_cascade.hpp"

namespace slowpass {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "slowpass 1.0.0";

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_double(const std::string& key, const std::string& s) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    auto r = std::from_chars(b, e, v);
    if (r.ec != std::errc() || r.ptr != e) throw UsageError("bad number for " + key + ": '" + s + "'");
    return v;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<double> parse_list(const std::string& key, const std::string& s) {
    std::vector<double> out;
    if (trim(s).empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
    return out;
}

ToleranceSpec tolerances(const RunConfig& cfg) { return {cfg.tol_rel, cfg.tol_abs}; }

void require_eps(const RunConfig& cfg) {
    if (cfg.eps.empty()) throw UsageError("--eps is required");
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    if (!f) throw Error("IoError", "cannot write " + p.string());
    f << text;
}

void write_json(const fs::path& p, const json& j) { write_file(p, j.dump(2) + "\n"); }

// CSV writer with a header row; numbers in shortest round-trip form.
class Csv {
public:
    Csv(const fs::path& p, const std::vector<std::string>& cols) : f_(p) {
        if (!f_) throw Error("IoError", "cannot write " + p.string());
        for (std::size_t i = 0; i < cols.size(); ++i) f_ << (i ? "," : "") << cols[i];
        f_ << "\n";
    }
    template <class... A>
    void row(const A&... a) {
        bool first = true;
        ((f_ << (first ? "" : ",") << cell(a), first = false), ...);
        f_ << "\n";
    }

private:
    static std::string cell(double v) { return num(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(const std::string& v) { return v; }
    std::ofstream f_;
};

fs::path eps_dir(const RunConfig& cfg, const std::string& prefix, double eps) {
    fs::path d = fs::path(cfg.out) / (prefix + num(eps));
    fs::create_directories(d);
    return d;
}

json pole_json() {
    const auto& f = painleve_layer().fit;
    json c = json::object();
    for (auto [k, v] : f.coef) c[std::to_string(k)] = v;
    return {{"tau0", f.tau0}, {"a4", f.a4}, {"fit_residual", f.fit_residual}, {"coefficients", c}};
}

}  // namespace

std::string serialize_config(const RunConfig& cfg) {
    std::string eps;
    for (std::size_t i = 0; i < cfg.eps.size(); ++i) eps += (i ? "," : "") + num(cfg.eps[i]);
    std::ostringstream os;
    os << "eps=" << eps << "\n"
       << "C=" << num(cfg.C) << "\n"
       << "seed_order=" << cfg.seed_order << "\n"
       << "tol_rel=" << num(cfg.tol_rel) << "\n"
       << "tol_abs=" << num(cfg.tol_abs) << "\n"
       << "out=" << cfg.out << "\n"
       << "phi0=" << num(cfg.phi0) << "\n"
       << "phi1=" << num(cfg.phi1) << "\n"
       << "T_period=" << num(cfg.T_period) << "\n";
    return os.str();
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw UsageError("config line " + std::to_string(lineno) + " has no '='");
        const std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
        if (key == "eps") cfg.eps = parse_list(key, val);
        else if (key == "C") cfg.C = parse_double(key, val);
        else if (key == "seed_order") {
            const double v = parse_double(key, val);
            if (v != std::floor(v)) throw UsageError("seed_order must be an integer");
            cfg.seed_order = static_cast<int>(v);
        } else if (key == "tol_rel") cfg.tol_rel = parse_double(key, val);
        else if (key == "tol_abs") cfg.tol_abs = parse_double(key, val);
        else if (key == "out") cfg.out = val;
        else if (key == "phi0") cfg.phi0 = parse_double(key, val);
        else if (key == "phi1") cfg.phi1 = parse_double(key, val);
        else if (key == "T_period") cfg.T_period = parse_double(key, val);
        else throw UsageError("unknown config key '" + key + "'");
    }
    return cfg;
}

void cmd_simulate(const RunConfig& cfg, std::ostream& log) {
    require_eps(cfg);
    auto runs = simulate_sweep(cfg.eps, cfg.C, cfg.seed_order, tolerances(cfg));
    for (const auto& r : runs) {
        const fs::path d = eps_dir(cfg, "eps_", r.eps);
        {
            Csv csv(d / "trajectory.csv", {"t", "re_u", "im_u"});
            for (std::size_t i = 0; i < r.trajectory.size(); ++i) {
                const cplx u = r.trajectory.y(i, 0);
                csv.row(r.trajectory.t(i), u.real(), u.imag());
            }
        }
        json sp = json::array(), pe = json::array();
        for (const auto& s : r.spikes) sp.push_back({{"t", s.t}, {"amplitude", s.amplitude}});
        for (const auto& p : r.periods) pe.push_back({{"t", p.t}, {"period", p.period}});
        write_json(d / "spikes.json", {{"spikes", sp}, {"periods", pe}});
        RunConfig one = cfg;
        one.eps = {r.eps};
        write_json(d / "metadata.json",
                   {{"eps", r.eps},
                    {"C", r.C},
                    {"seed_order", r.seed_order},
                    {"tol_rel", cfg.tol_rel},
                    {"tol_abs", cfg.tol_abs},
                    {"t_start", r.t_start},
                    {"t_end", r.t_end},
                    {"samples", r.trajectory.size()},
                    {"steps_accepted", r.trajectory.stats.accepted},
                    {"steps_rejected", r.trajectory.stats.rejected},
                    {"spike_count", r.spikes.size()},
                    {"pole_fit", pole_json()},
                    {"version", kVersion}});
        write_file(d / "config.txt", serialize_config(one));
        log << "eps " << num(r.eps) << ": " << r.trajectory.size() << " samples, " << r.spikes.size() << " spikes -> "
            << d.string() << "\n";
    }
}

void cmd_layers(const RunConfig& cfg, std::ostream& log) {
    require_eps(cfg);
    if (!(cfg.C > 0.0 && cfg.C <= 1.0)) throw Error("InvalidInput", "C must lie in (0, 1]");
    const double ts = bc().t_star;
    const auto& L = painleve_layer();
    const int n = 400;
    for (double eps : cfg.eps) {
        const fs::path d = eps_dir(cfg, "layers_eps_", eps);
        write_json(d / "pole_fit.json", pole_json());
        {
            Csv csv(d / "outer.csv", {"t", "re_u", "im_u"});
            const double lo = outer_validity(eps, 5.0).first, hi = ts + cfg.C;
            for (int j = 0; j <= n && lo < hi; ++j) {
                const double t = hi - (hi - lo) * j / n;
                const cplx u = outer_eval(t, eps, 2);
                csv.row(t, u.real(), u.imag());
            }
        }
        {
            Csv csv(d / "painleve.csv", {"t", "tau", "re_u", "im_u"});
            const double s = std::pow(eps, 0.8);
            const double lo = L.fit.tau0 + 2.0 * std::pow(eps, 0.2), hi = std::min(L.opt.tau_start, cfg.C / s);
            for (int j = 0; j <= n; ++j) {
                const double tau = hi - (hi - lo) * j / n, t = ts + s * tau;
                if (!layer1_valid(t, eps, L)) continue;
                const cplx u = layer1_eval(t, eps, L);
                csv.row(t, tau, u.real(), u.imag());
            }
        }
        {
            Csv csv(d / "separatrix.csv", {"t", "theta", "re_u", "im_u"});
            const double edge = std::pow(eps, -0.2), t0 = ts + std::pow(eps, 0.8) * L.fit.tau0;
            for (int j = 1; j < n; ++j) {
                const double th = edge - 2.0 * edge * j / n;
                const cplx u = layer2_eval(th, eps, L.fit.tau0);
                csv.row(t0 + eps * th, th, u.real(), u.imag());
            }
        }
        ScheduleOptions so;
        so.strict = false;
        const int bound = cascade_validity_bound(eps);
        auto sched = spike_schedule(eps, L.fit, std::max(5, bound), so);
        {
            Csv csv(d / "cascade.csv", {"k", "g3", "Omega", "P", "lambda", "t_spike", "within_validity"});
            for (const auto& s : sched) csv.row(s.k, s.g3_k, s.Omega_k, s.P_k, s.lambda_k, s.t_spike, s.k <= bound ? 1 : 0);
        }
        {
            Csv csv(d / "intermediate.csv", {"k", "t", "T", "re_u", "im_u"});
            IntermediateOptions io;
            io.law = CascadeLaw::EnergyBalance;
            io.lambda_threshold = std::pow(eps, -2.0 / 3.0);
            const double sc = std::pow(eps, 5.0 / 6.0);
            for (std::size_t k = 1; k < sched.size() && static_cast<int>(k) <= bound; ++k) {
                // stay clear of the poles at both ends, where the separatrix layer takes over
                for (int j = 5; j <= 95; ++j) {
                    const double T = -sched[k].Omega_k * j / 100.0;
                    try {
                        auto [A, B] = intermediate_leader(T, static_cast<int>(k), eps, L.fit.a4, io);
                        const cplx u = bc().U_star + std::pow(eps, 1.0 / 3.0) * A + cplx(0.0, std::sqrt(eps) * B);
                        csv.row(static_cast<int>(k), sched[k - 1].t_spike + sc * T, T, u.real(), u.imag());
                    } catch (const Error&) {
                    }
                }
            }
        }
        AveragedOptions ao;
        ao.T_period = cfg.T_period;
        const double collar = ao.collar_factor * std::pow(eps, 2.0 / 3.0);
        {
            Csv csv(d / "modulation.csv", {"t", "E", "S", "phi", "sigma", "K_abs", "S_prime"});
            for (const auto& r : modulation_table().rows(cfg.phi0, cfg.phi1, cfg.T_period))
                if (r.t < ts - collar && r.t >= ts - cfg.C) csv.row(r.t, r.E, r.S, r.phi, r.sigma, r.K_abs, r.S_prime);
        }
        {
            Csv csv(d / "averaged.csv", {"t", "re_u", "im_u"});
            const double hi = ts - collar, lo = ts - cfg.C;
            const int m = 4000;
            for (int j = 1; j <= m && lo < hi; ++j) {
                const double t = hi - (hi - lo) * j / m;
                if (!averaged_valid(t, eps, ao)) continue;
                const cplx u = averaged_eval(t, eps, cfg.phi0, cfg.phi1, ao);
                csv.row(t, u.real(), u.imag());
            }
        }
        {
            std::vector<double> grid;
            const int m = 4000;
            for (int j = 0; j <= m; ++j) grid.push_back(ts + cfg.C - 2.0 * cfg.C * j / m);
            CompositeOptions co;
            co.T_period = cfg.T_period;
            auto c = composite_solution(eps, grid, cfg.phi0, cfg.phi1, co);
            Csv csv(d / "composite.csv", {"t", "re_u", "im_u", "layer"});
            for (std::size_t i = 0; i < grid.size(); ++i) csv.row(c.t[i], c.u[i].real(), c.u[i].imag(), to_string(c.tags[i]));
            json jumps = json::array();
            for (const auto& j : c.jumps)
                jumps.push_back({{"t", j.t}, {"from", to_string(j.from)}, {"to", to_string(j.to)}, {"jump", j.jump}});
            write_json(d / "composite.json", {{"uncovered_points", c.uncovered}, {"switch_jumps", jumps}});
        }
        log << "layers for eps " << num(eps) << " -> " << d.string() << "\n";
    }
}

bool cmd_match(const RunConfig& cfg, std::ostream& log) {
    std::vector<double> grid = cfg.eps.empty() ? AcceptanceOptions{}.eps_grid : cfg.eps;
    if (grid.size() < 3) throw Error("InsufficientPoints", "matching needs at least three eps values");
    const fs::path d = fs::path(cfg.out) / "match";
    fs::create_directories(d);
    auto runs = simulate_sweep(grid, cfg.C, cfg.seed_order, tolerances(cfg));
    const double ts = bc().t_star;

    json reports = json::array(), fits = json::array();
    auto report_json = [](const MatchReport& r) {
        return json{{"layer_a", r.layer_a}, {"layer_b", r.layer_b}, {"t_lo", r.t_lo},     {"t_hi", r.t_hi},
                    {"eps", r.eps},         {"sup_error", r.sup_error}, {"rms_error", r.rms_error}, {"samples", r.samples}};
    };
    auto fit_json = [](const ScalingFit& f) {
        return json{{"quantity", f.quantity}, {"slope", f.slope},       {"half_width", f.half_width},
                    {"intercept", f.intercept}, {"residual", f.residual}, {"eps_grid", f.eps_grid}};
    };
    for (int order : {0, 1, 2}) {
        std::vector<MatchReport> reps;
        for (const auto& r : runs) {
            reps.push_back(overlap_error(outer_layer(r.eps, order), simulation_layer(r), ts + 0.3, ts + 0.5, r.eps));
            reports.push_back(report_json(reps.back()));
        }
        fits.push_back(fit_json(order_fit(reps)));
    }
    {
        std::vector<double> eps, sup;
        for (const auto& r : runs) {
            const double s = std::pow(r.eps, 0.8);
            try {
                auto rep = overlap_error(painleve_layer_eval(r.eps), simulation_layer(r), ts + 5 * s, ts + 15 * s, r.eps);
                reports.push_back(report_json(rep));
                eps.push_back(r.eps);
                sup.push_back(rep.sup_error);
            } catch (const Error& e) {
                log << "painleve overlap at eps " << num(r.eps) << " skipped: " << e.what() << "\n";
            }
        }
        if (eps.size() >= 3) fits.push_back(fit_json(fit_power_law("painleve/simulation", eps, sup)));
    }
    write_json(d / "reports.json", reports);
    write_json(d / "fits.json", fits);
    {
        Csv csv(d / "spike_alignment.csv",
                {"eps", "law", "k", "measured", "predicted", "rel_error", "amplitude", "amplitude_rel_error"});
        for (const auto& r : runs)
            for (auto law : {CascadeLaw::Printed, CascadeLaw::EnergyBalance}) {
                ScheduleOptions so;
                so.law = law;
                so.strict = false;
                try {
                    for (const auto& a : spike_alignment(r, spike_schedule(r.eps, painleve_layer().fit, 5, so)))
                        csv.row(r.eps, std::string(law == CascadeLaw::Printed ? "printed" : "energy_balance"), a.k,
                                a.measured, a.predicted, a.rel_error, a.amplitude, a.amplitude_rel_error);
                } catch (const Error& e) {
                    log << "spike alignment at eps " << num(r.eps) << " skipped: " << e.what() << "\n";
                }
            }
    }
    AcceptanceOptions ao;
    ao.eps_grid = grid;
    ao.C = cfg.C;
    ao.seed_order = cfg.seed_order;
    ao.tol = tolerances(cfg);
    auto results = acceptance_suite(ao);
    const bool ok = acceptance_passed(results);
    json acc = json::array();
    {
        Csv csv(d / "acceptance.csv", {"id", "title", "pass", "informational"});
        for (const auto& r : results) {
            acc.push_back({{"id", r.id}, {"title", r.title}, {"pass", r.pass}, {"informational", r.informational},
                           {"measured", r.measured}});
            csv.row(r.id, "\"" + r.title + "\"", r.pass ? 1 : 0, r.informational ? 1 : 0);
            log << (r.pass ? "PASS" : (r.informational ? "INFO" : "FAIL")) << " " << r.id << " " << r.title << ": "
                << r.measured << "\n";
        }
    }
    write_json(d / "acceptance.json", {{"criteria", acc}, {"all_gating_pass", ok}, {"version", kVersion}});
    return ok;
}

void cmd_portrait(const RunConfig& cfg, std::ostream& log) {
    const fs::path d = fs::path(cfg.out) / "portrait";
    fs::create_directories(d);
    const double ts = bc().t_star;
    Csv eq(d / "equilibria.csv", {"T", "value", "energy"});
    for (double T : {ts - 0.5, ts, ts + 0.5}) {
        std::vector<double> levels;
        const double base = frozen_energy(center_root(T), T);
        for (double off : {0.1, 0.3, 0.6, 1.0, 1.5, 2.5, 4.0}) levels.push_back(base + off);
        for (const auto& b : equilibrium_branches(T)) {
            eq.row(T, b.value, frozen_energy(b.value, T));
            if (b.label != "U1" && b.label != "single") levels.push_back(frozen_energy(b.value, T));
        }
        Csv csv(d / ("portrait_T" + num(T) + ".csv"), {"curve", "level", "center", "re_v", "im_v"});
        int curve = 0;
        for (double level : levels) {
            Portrait p;
            try {
                p = frozen_portrait(T, {level});
            } catch (const Error&) {
                continue;
            }
            for (const auto& c : p.curves) {
                for (auto z : c.points) csv.row(curve, c.level, c.reference.real(), z.real(), z.imag());
                ++curve;
            }
        }
        log << "portrait at T " << num(T) << ": " << curve << " curves\n";
    }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Slow passage through a saddle-center coalescence: simulation, layers and matching"};
    app.require_subcommand(1);
    std::string config_path, eps_text;
    double C = 0, tol_rel = 0, tol_abs = 0, phi0 = 0, phi1 = 0, T_period = 0;
    int seed_order = 0;
    std::string outdir;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key=value config file; flags override it");
        sub->add_option("--eps", eps_text, "comma-separated list of eps values");
        sub->add_option("--C", C, "half width of the t interval around the coalescence point");
        sub->add_option("--seed-order", seed_order, "order of the outer seed (0, 1 or 2)");
        sub->add_option("--tol-rel", tol_rel, "relative integration tolerance");
        sub->add_option("--tol-abs", tol_abs, "absolute integration tolerance");
        sub->add_option("--out", outdir, "output directory");
        sub->add_option("--phi0", phi0, "phase offset of the averaged layer");
        sub->add_option("--phi1", phi1, "phase-shift invariant of the averaged layer");
        sub->add_option("--T-period", T_period, "period of the fast variable");
    };
    std::vector<CLI::App*> subs;
    for (const char* name : {"simulate", "layers", "match", "portrait"}) subs.push_back(app.add_subcommand(name));
    subs[0]->description("integrate the amplitude equation and record spikes and periods");
    subs[1]->description("sample every asymptotic layer, the cascade table and the modulation table");
    subs[2]->description("overlap errors, scaling fits, spike alignment and the acceptance summary");
    subs[3]->description("level curves of the frozen system below, at and above the coalescence point");

    std::vector<std::string> argv_s{"slowpass"};
    argv_s.insert(argv_s.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_s) argv.push_back(s.data());

    CLI::App* chosen = nullptr;
    // options are re-registered per subcommand so they may follow it
    for (auto* s : subs) add_common(s);
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
        for (auto* s : subs)
            if (s->parsed()) chosen = s;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsage;
    }
    auto given = [&](const std::string& flag) { return chosen->get_option(flag)->count() > 0; };

    try {
        RunConfig cfg;
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f) throw UsageError("cannot read config file " + config_path);
            std::stringstream ss;
            ss << f.rdbuf();
            cfg = parse_config(ss.str());
        }
        if (given("--eps")) cfg.eps = parse_list("eps", eps_text);
        if (given("--C")) cfg.C = C;
        if (given("--seed-order")) cfg.seed_order = seed_order;
        if (given("--tol-rel")) cfg.tol_rel = tol_rel;
        if (given("--tol-abs")) cfg.tol_abs = tol_abs;
        if (given("--out")) cfg.out = outdir;
        if (given("--phi0")) cfg.phi0 = phi0;
        if (given("--phi1")) cfg.phi1 = phi1;
        if (given("--T-period")) cfg.T_period = T_period;
        if (!(cfg.T_period > 0.0)) throw UsageError("T_period must be positive");

        const std::string name = chosen->get_name();
        fs::create_directories(cfg.out);
        if (name == "simulate") cmd_simulate(cfg, out);
        else if (name == "layers") cmd_layers(cfg, out);
        else if (name == "portrait") cmd_portrait(cfg, out);
        else if (name == "match") {
            const bool ok = cmd_match(cfg, out);
            if (!ok) {
                err << "acceptance: at least one gating criterion failed\n";
                return kNumericFailure;
            }
        }
        return kSuccess;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n" << chosen->help();
        return kUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.kind() == "InvalidInput" ? kUsage : kNumericFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kNumericFailure;
    }
}

}  // namespace slowpass
