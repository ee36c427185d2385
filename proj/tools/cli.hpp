// Command-line front end: sweep, simulate, verify and mub.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fqkd/attack_spec.hpp"
#include "fqkd/metrics.hpp"

namespace fqkd::cli {

enum ExitCode { kOk = 0, kUsage = 1, kVerificationFailed = 2 };

/// Runs one command line. Normal output goes to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Sweep configuration:
///   {"attack": <attack spec>, "settings": [3],
///    "sweep": {"parameter": "alpha", "grid": [..] or
///              {"start": a, "stop": b, "count": n, "scale": "log"|"linear"}},
///    "convention": "raw_average", "envelope": false}
/// An optional "outer": {"parameter": "peaks", "grid": [...]} inside
/// "sweep" makes the sweep joint over both parameters.
struct SweepConfig {
    attacks::AttackSpec attack;
    franson::SettingsBank bank{{1}};
    std::string parameter;
    std::vector<double> grid;
    std::string outer_parameter; // empty for a single-parameter sweep
    std::vector<double> outer_grid;
    metrics::Convention convention = metrics::Convention::raw_average;
    bool envelope = false;
};

SweepConfig sweep_config_from_json(const nlohmann::json& doc);

/// Curve CSV for a sweep configuration. Joint sweeps add an `outer`
/// column and use their own schema tag.
std::string run_sweep(const SweepConfig& config, unsigned threads);

/// Named presets; nullopt for unknown names. Sweep presets that are not a
/// plain parameter sweep (fig2, table-sec6) have dedicated generators.
std::optional<nlohmann::json> sweep_preset(const std::string& name);
std::optional<nlohmann::json> simulate_preset(const std::string& name);

/// Square versus information-matched Gaussian window on M = 64 for
/// dtau = 1..12.
std::string fig2_csv();

/// Information and disturbance of the named attack configurations under
/// every exponent reading.
std::string table_sec6_csv();

struct VerifyResult {
    std::string formula;
    std::string label;
    double closed_form;
    double enumerated;
    bool passed;
};

/// Closed forms against enumeration over the default grid.
std::vector<VerifyResult> verify_default(double tol = 1e-9);

/// One closed-form case; the parameters not used by the formula are
/// ignored. Throws std::invalid_argument on unknown names.
VerifyResult verify_one(const std::string& formula, const metrics::OracleParams& params, double tol = 1e-9);

} // namespace fqkd::cli
