#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace slowpass {

// Raised for malformed command lines and config files; maps to exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::vector<double> eps;
    double C = 0.5;
    int seed_order = 2;
    double tol_rel = 1e-10;
    double tol_abs = 1e-12;
    std::string out = "out";
    double phi0 = 0.0;
    double phi1 = 0.0;
    double T_period = 1.0;

    bool operator==(const RunConfig&) const = default;
};

// Canonical key=value form: fixed key order, shortest round-trip numbers, one key per line.
std::string serialize_config(const RunConfig& cfg);
// Accepts blank lines and '#' comments; unknown keys and bad values raise UsageError.
RunConfig parse_config(const std::string& text);

enum ExitCode { kSuccess = 0, kNumericFailure = 1, kUsage = 2 };

void cmd_simulate(const RunConfig& cfg, std::ostream& log);
void cmd_layers(const RunConfig& cfg, std::ostream& log);
// Returns true when every gating acceptance criterion passes.
bool cmd_match(const RunConfig& cfg, std::ostream& log);
void cmd_portrait(const RunConfig& cfg, std::ostream& log);

// Full command-line entry point: args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace slowpass
