#include "doctest.h"
#include "json.hpp"
#include "slowpass/cli.hpp"
#include "slowpass/equilibria.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace slowpass;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("slowpass_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int run(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return code;
}

std::vector<std::vector<double>> read_csv(const fs::path& p, std::string* header) {
    std::ifstream f(p);
    std::string line;
    std::getline(f, *header);
    std::vector<std::vector<double>> rows;
    while (std::getline(f, line)) {
        std::vector<double> r;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) r.push_back(std::strtod(cell.c_str(), nullptr));
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

TEST_CASE("config canonical round trip") {
    RunConfig c;
    c.eps = {1e-3, 0.1 + 0.2, 3e-4};
    c.C = 0.45;
    c.seed_order = 1;
    c.tol_rel = 1e-11;
    c.out = "runs/a b";
    c.phi0 = -0.3;
    c.phi1 = 1.0 / 3.0;
    c.T_period = 2.5;
    const std::string text = serialize_config(c);
    CHECK(parse_config(text) == c);
    CHECK(serialize_config(parse_config(text)) == text);
    CHECK(serialize_config(RunConfig{}) == serialize_config(parse_config(serialize_config(RunConfig{}))));
    // comments and blank lines are ignored, keys may be reordered
    CHECK(parse_config("# run\n\nC = 0.3\neps=1e-3\n").C == 0.3);
    CHECK_THROWS_AS(parse_config("bogus=1\n"), UsageError);
    CHECK_THROWS_AS(parse_config("C=abc\n"), UsageError);
    CHECK_THROWS_AS(parse_config("seed_order=1.5\n"), UsageError);
    CHECK_THROWS_AS(parse_config("no equals sign\n"), UsageError);
}

TEST_CASE("usage errors exit with 2") {
    const auto d = scratch("usage");
    CHECK(run({"simulate", "--C", "0.5", "--out", d.string()}) == kUsage);
    CHECK(run({"simulate", "--eps", "abc", "--out", d.string()}) == kUsage);
    CHECK(run({"frobnicate"}) == kUsage);
    CHECK(run({}) == kUsage);
    CHECK(run({"simulate", "--eps", "1e-3", "--config", (d / "missing.txt").string()}) == kUsage);
    CHECK(run({"simulate", "--eps", "0.5", "--out", d.string()}) == kUsage);
    std::string out;
    CHECK(run({"--help"}, &out) == kSuccess);
    CHECK(out.find("simulate") != std::string::npos);
}

TEST_CASE("simulate writes trajectory, spikes and metadata") {
    const auto d = scratch("simulate");
    REQUIRE(run({"simulate", "--eps", "1e-2,3e-3", "--C", "0.4", "--out", d.string()}) == kSuccess);
    for (const char* tok : {"eps_0.01", "eps_0.003"}) {
        const fs::path run_dir = d / tok;
        REQUIRE(fs::exists(run_dir / "trajectory.csv"));
        std::string header;
        auto rows = read_csv(run_dir / "trajectory.csv", &header);
        CHECK(header == "t,re_u,im_u");
        REQUIRE(rows.size() > 10);
        for (std::size_t i = 1; i < rows.size(); ++i) REQUIRE(rows[i][0] < rows[i - 1][0]);
        auto spikes = json::parse(slurp(run_dir / "spikes.json"));
        CHECK(spikes["spikes"].size() > 0);
        CHECK(spikes["periods"].size() > 0);
        auto meta = json::parse(slurp(run_dir / "metadata.json"));
        CHECK(meta["C"].get<double>() == 0.4);
        CHECK(meta["pole_fit"]["tau0"].get<double>() == doctest::Approx(-2.7386907436).epsilon(1e-9));
        CHECK(meta.contains("version"));
        auto cfg = parse_config(slurp(run_dir / "config.txt"));
        CHECK(cfg.eps.size() == 1);
    }
}

TEST_CASE("flags override the config file and outputs are deterministic") {
    const auto d = scratch("config");
    RunConfig c;
    c.eps = {1e-2};
    c.C = 0.2;
    c.out = (d / "a").string();
    {
        std::ofstream f(d / "run.cfg");
        f << serialize_config(c);
    }
    REQUIRE(run({"simulate", "--config", (d / "run.cfg").string(), "--C", "0.3"}) == kSuccess);
    auto meta = json::parse(slurp(d / "a" / "eps_0.01" / "metadata.json"));
    CHECK(meta["C"].get<double>() == 0.3);
    REQUIRE(run({"simulate", "--config", (d / "run.cfg").string(), "--C", "0.3", "--out", (d / "b").string()}) ==
            kSuccess);
    CHECK(slurp(d / "a" / "eps_0.01" / "trajectory.csv") == slurp(d / "b" / "eps_0.01" / "trajectory.csv"));
}

TEST_CASE("layers") {
    const auto d = scratch("layers");
    REQUIRE(run({"layers", "--eps", "1e-3", "--out", d.string()}) == kSuccess);
    const fs::path l = d / "layers_eps_0.001";
    std::string header;
    auto cascade = read_csv(l / "cascade.csv", &header);
    CHECK(header.rfind("k,g3,Omega", 0) == 0);
    REQUIRE(cascade.size() >= 4);
    for (std::size_t i = 1; i < cascade.size(); ++i) CHECK(cascade[i][1] > cascade[i - 1][1]);
    auto mod = read_csv(l / "modulation.csv", &header);
    CHECK(header == "t,E,S,phi,sigma,K_abs,S_prime");
    REQUIRE(!mod.empty());
    for (const auto& r : mod) CHECK(r[0] < bc().t_star - 5.0 * std::pow(1e-3, 2.0 / 3.0));
    auto pole = json::parse(slurp(l / "pole_fit.json"));
    for (const char* k : {"tau0", "a4", "fit_residual"}) CHECK(pole.contains(k));
    for (const char* f : {"outer.csv", "painleve.csv", "separatrix.csv", "intermediate.csv", "averaged.csv", "composite.csv"})
        CHECK(fs::file_size(l / f) > 100);
}

TEST_CASE("portrait") {
    const auto d = scratch("portrait");
    REQUIRE(run({"portrait", "--out", d.string()}) == kSuccess);
    std::string header;
    auto eq = read_csv(d / "portrait" / "equilibria.csv", &header);
    CHECK(header == "T,value,energy");
    // one equilibrium below, two at and three above the coalescence point
    CHECK(eq.size() == 6);
    int curves = 0;
    for (const auto& e : fs::directory_iterator(d / "portrait"))
        if (e.path().filename().string().rfind("portrait_T", 0) == 0) ++curves;
    CHECK(curves == 3);
}

TEST_CASE("match writes reports and an acceptance summary") {
    const auto d = scratch("match");
    CHECK(run({"match", "--eps", "1e-2,1e-3", "--out", d.string()}) == kNumericFailure);
    const int code = run({"match", "--eps", "1e-2,3e-3,1e-3", "--out", d.string()});
    auto acc = json::parse(slurp(d / "match" / "acceptance.json"));
    CHECK(acc["criteria"].size() == 14);
    CHECK((code == kSuccess) == acc["all_gating_pass"].get<bool>());
    bool seen_jump = false, seen_sigma = false;
    for (const auto& c : acc["criteria"]) {
        if (c["id"] == 5) seen_jump = c["measured"].get<std::string>().find("n=2 jump") != std::string::npos;
        if (c["id"] == 13) {
            seen_sigma = c["measured"].get<std::string>().find("sigma*") != std::string::npos;
            CHECK(c["informational"].get<bool>());
        }
    }
    CHECK(seen_jump);
    CHECK(seen_sigma);
    auto fits = json::parse(slurp(d / "match" / "fits.json"));
    CHECK(fits.size() >= 3);
    CHECK(fs::exists(d / "match" / "spike_alignment.csv"));
}
