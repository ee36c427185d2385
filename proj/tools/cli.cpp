#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "fqkd/attack_spec.hpp"
#include "fqkd/format.hpp"
#include "fqkd/mcsim.hpp"
#include "fqkd/mubnet.hpp"

namespace fqkd::cli {

using nlohmann::json;

namespace {

constexpr const char* kManifestSchema = "fqkd.manifest/1";
constexpr const char* kFig2Schema = "fqkd.fig2/1";
constexpr const char* kJointCurveSchema = "fqkd.joint_curve/1";
constexpr const char* kTableSchema = "fqkd.table/1";
constexpr const char* kSimulationSchema = "fqkd.simulation/1";
constexpr const char* kVerifySchema = "fqkd.verify/1";

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw UsageError("config is not valid JSON: " + std::string(e.what()));
    }
}

std::vector<double> grid_from_json(const json& g) {
    if (g.is_array()) return g.get<std::vector<double>>();
    if (!g.is_object()) throw std::invalid_argument("sweep grid must be an array or a range object");
    const double start = g.at("start").get<double>();
    const double stop = g.at("stop").get<double>();
    const int count = g.at("count").get<int>();
    const bool log = g.value("scale", std::string("linear")) == "log";
    if (count < 0) throw std::invalid_argument("grid count must be >= 0");
    if (log && !(start > 0.0 && stop > 0.0)) throw std::invalid_argument("log grid needs positive bounds");
    std::vector<double> out;
    for (int i = 0; i < count; ++i) {
        const double f = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        out.push_back(log ? start * std::pow(stop / start, f) : start + (stop - start) * f);
    }
    return out;
}

attacks::AttackSpec with_parameter(attacks::AttackSpec spec, const std::string& name, double v) {
    if (name == "alpha") spec.alpha = v;
    else if (name == "width") spec.width = v;
    else if (name == "window") spec.window = static_cast<int>(std::lround(v));
    else if (name == "peaks") spec.peaks = static_cast<int>(std::lround(v));
    else throw std::invalid_argument("unknown sweep parameter: " + name);
    return spec;
}

json manifest(const std::string& command, const json& config, std::optional<std::uint64_t> seed,
              const std::vector<std::string>& outputs, double seconds) {
    json m = {{"schema", kManifestSchema},
              {"command", command},
              {"config", config},
              {"tool_version", FQKD_VERSION},
              {"outputs", outputs},
              {"duration_seconds", format_number(seconds)}};
    m["seed"] = seed ? json(*seed) : json(nullptr);
    return m;
}

// Writes the artifact (or prints it) and, with --out, its manifest.
void emit(const std::string& contents, const std::string& out_path, const std::string& command,
          const json& config, std::optional<std::uint64_t> seed,
          std::chrono::steady_clock::time_point started, std::ostream& out) {
    if (out_path.empty()) {
        out << contents;
        return;
    }
    write_file_atomic(out_path, contents);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_file_atomic(out_path + ".manifest.json",
                      manifest(command, config, seed, {out_path}, seconds).dump(2) + "\n");
}

std::uint64_t parse_seed(const std::string& text, const char* source) {
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || p != end || text.empty())
        throw UsageError(std::string("invalid seed from ") + source + ": " + text);
    return v;
}

std::vector<int> companion_settings(int delta_e, int d) {
    std::vector<int> s{delta_e};
    for (int x = delta_e + 1; static_cast<int>(s.size()) < d; ++x)
        if (x % delta_e != 0) s.push_back(x);
    return s;
}

} // namespace

//---------------------------------------------------------------------------//

SweepConfig sweep_config_from_json(const json& doc) {
    if (!doc.is_object()) throw std::invalid_argument("sweep config must be a JSON object");
    SweepConfig c;
    c.attack = attacks::attack_spec_from_json(doc.at("attack"));
    if (c.attack.kind == attacks::AttackSpec::Kind::none) throw std::invalid_argument("sweep needs an attack");
    c.bank = franson::SettingsBank(doc.at("settings").get<std::vector<int>>());
    const auto& s = doc.at("sweep");
    c.parameter = s.at("parameter").get<std::string>();
    c.grid = grid_from_json(s.at("grid"));
    if (c.grid.empty()) throw UsageError("sweep grid is empty");
    if (s.contains("outer")) {
        c.outer_parameter = s.at("outer").at("parameter").get<std::string>();
        c.outer_grid = grid_from_json(s.at("outer").at("grid"));
        if (c.outer_grid.empty()) throw UsageError("outer sweep grid is empty");
        with_parameter(c.attack, c.outer_parameter, c.outer_grid.front());
    }
    c.convention = metrics::convention_from_string(doc.value("convention", std::string("raw_average")));
    c.envelope = doc.value("envelope", false);
    with_parameter(c.attack, c.parameter, c.grid.front());
    c.bank.validate(c.attack.frame);
    return c;
}

std::string run_sweep(const SweepConfig& c, unsigned threads) {
    if (c.outer_parameter.empty()) {
        auto family = [&](double v) { return *attacks::build_attack(with_parameter(c.attack, c.parameter, v)); };
        auto points = metrics::info_disturbance_curve(family, c.grid, c.bank, c.convention, threads);
        if (c.envelope) points = metrics::monotone_envelope(std::move(points));
        return metrics::curve_to_csv(points);
    }
    std::ostringstream out;
    out << "# schema=" << kJointCurveSchema << " outer=" << c.outer_parameter << '\n';
    out << "param,eve_bits,p_error,visibility,outer\n";
    for (double outer : c.outer_grid) {
        const auto base = with_parameter(c.attack, c.outer_parameter, outer);
        auto family = [&](double v) { return *attacks::build_attack(with_parameter(base, c.parameter, v)); };
        auto points = metrics::info_disturbance_curve(family, c.grid, c.bank, c.convention, threads);
        if (c.envelope) points = metrics::monotone_envelope(std::move(points));
        for (const auto& p : points)
            out << format_number(p.param) << ',' << format_number(p.eve_bits) << ',' << format_number(p.p_error)
                << ',' << format_number(1.0 - 2.0 * p.p_error) << ',' << format_number(outer) << '\n';
    }
    return out.str();
}

std::optional<json> sweep_preset(const std::string& name) {
    if (name == "fig3")
        return json{{"attack",
                     {{"kind", "multipeak"},
                      {"frame", {{"num_bins", 1024}, {"bin_width", 1}}},
                      {"params", {{"peaks", 64}, {"spacings", {3}}, {"weights", "gaussian"}, {"alpha", 0.01}}},
                      {"exponent", "squared"}}},
                    {"settings", {3}},
                    {"sweep", {{"parameter", "alpha"},
                               {"grid", {{"start", 1e-4}, {"stop", 1e-1}, {"count", 121}, {"scale", "log"}}}}}};
    if (name == "fig5")
        return json{{"attack",
                     {{"kind", "product_multipeak"},
                      {"frame", {{"num_bins", 1024}, {"bin_width", 1}}},
                      {"params", {{"peaks", 16}, {"spacings", {1, 17}}, {"weights", "gaussian"}, {"alpha", 0.3}}},
                      {"exponent", "squared"}}},
                    {"settings", {1, 17}},
                    {"sweep", {{"parameter", "alpha"},
                               {"grid", {{"start", 1e-3}, {"stop", 10.0}, {"count", 121}, {"scale", "log"}}}}}};
    return std::nullopt;
}

std::optional<json> simulate_preset(const std::string& name) {
    json base = {{"frame", {{"num_bins", 1024}, {"bin_width", 1}}},
                 {"p_timing", 0.5},
                 {"settings", {3}},
                 {"intercept_fraction", 1.0},
                 {"n_frames", 1000000},
                 {"seed", 1}};
    auto multipeak = [](int spacing) {
        return json{{"kind", "multipeak"}, {"params", {{"peaks", 32}, {"spacings", {spacing}}, {"weights", "flat"}}}};
    };
    if (name == "no-attack") {
        base["attack"] = nullptr;
    } else if (name == "sharp") {
        base["attack"] = {{"kind", "sharp"}};
    } else if (name == "flat-multipeak") {
        base["attack"] = multipeak(3);
    } else if (name == "wrong-spacing") {
        base["attack"] = multipeak(3);
        base["settings"] = {5};
    } else {
        return std::nullopt;
    }
    return base;
}

std::string fig2_csv() {
    const FrameSpec frame(64);
    const int window = 6;
    // 6 does not divide 64; the square window is enumerated on the nearest
    // frame it tiles, where its disturbance is the same.
    const FrameSpec tiled(60);
    const double bits = std::log2(64.0 / window);
    const double width = metrics::match_gaussian_window_width(frame, bits);
    const auto gauss = attacks::gaussian_window_attack(frame, width);
    const auto square = attacks::square_window_attack(tiled, window);
    std::ostringstream out;
    out << "# schema=" << kFig2Schema << " window=" << window << " num_bins=64"
        << " eve_bits=" << format_number(bits) << " gaussian_width=" << format_number(width) << '\n';
    out << "dtau,square_p_error,gaussian_p_error\n";
    for (int dtau = 1; dtau <= 12; ++dtau) {
        const franson::SettingsBank bank({dtau});
        out << dtau << ',' << format_number(metrics::disturbance(square, bank).p_error) << ','
            << format_number(metrics::disturbance(gauss, bank).p_error) << '\n';
    }
    return out.str();
}

std::string table_sec6_csv() {
    const FrameSpec frame(1024);
    std::ostringstream out;
    out << "# schema=" << kTableSchema << '\n';
    out << "case,exponent,eve_bits,p_error,visibility\n";
    auto row = [&](const std::string& name, const char* exponent, const attacks::DiagonalAttack& a,
                   const franson::SettingsBank& bank) {
        const auto r = metrics::disturbance(a, bank);
        out << name << ',' << exponent << ',' << format_number(metrics::eve_information(a)) << ','
            << format_number(r.p_error) << ',' << format_number(r.visibility) << '\n';
    };
    const franson::SettingsBank one({3});
    const franson::SettingsBank two({1, 17});
    row("multipeak_flat_L32", "none", attacks::multipeak_attack(frame, attacks::flat_shape(32, {3})), one);
    row("product_flat_w16", "none", attacks::product_multipeak_attack(frame, attacks::flat_shape(16, {1, 17})), two);
    for (auto mode : {attacks::ExponentMode::squared, attacks::ExponentMode::absolute, attacks::ExponentMode::signed_}) {
        const char* m = attacks::to_string(mode);
        row("multipeak_gaussian_L32_a0.0335", m,
            attacks::multipeak_attack(frame, attacks::gaussian_grid_weights(32, {3}, 0.0335, mode)), one);
        row("multipeak_gaussian_L64_a0.0084", m,
            attacks::multipeak_attack(frame, attacks::gaussian_grid_weights(64, {3}, 0.0084, mode)), one);
        row("product_gaussian_w16_a0.3", m,
            attacks::product_multipeak_attack(frame, attacks::gaussian_grid_weights(16, {1, 17}, 0.3, mode)), two);
        row("product_gaussian_w16_a0.2", m,
            attacks::product_multipeak_attack(frame, attacks::gaussian_grid_weights(16, {1, 17}, 0.2, mode)), two);
    }
    return out.str();
}

//---------------------------------------------------------------------------//

VerifyResult verify_one(const std::string& formula, const metrics::OracleParams& p, double tol) {
    const double expect = metrics::closed_form(formula, p);
    std::ostringstream label;
    double got = 0.0;
    if (formula == "window") {
        const int span = std::max({1024, 2 * p.delta_tau + 2, 2 * p.window});
        const FrameSpec frame(p.window * ((span + p.window - 1) / p.window));
        label << "L=" << p.window << " dtau=" << p.delta_tau;
        got = metrics::disturbance(attacks::square_window_attack(frame, p.window), franson::SettingsBank({p.delta_tau}))
                  .p_error;
    } else if (formula == "multipeak" || formula == "multi_setting") {
        const int delta_e = p.delta_tau > 0 ? p.delta_tau : 3;
        const int d = formula == "multipeak" ? 1 : p.settings;
        const FrameSpec frame(1024);
        label << "L=" << p.window << " delta_e=" << delta_e;
        if (formula == "multi_setting") label << " d=" << d;
        got = metrics::disturbance(attacks::multipeak_attack(frame, attacks::flat_shape(p.window, {delta_e})),
                                   franson::SettingsBank(companion_settings(delta_e, d)))
                  .p_error;
    } else if (formula == "product") {
        const int w = p.peaks_per_axis;
        const FrameSpec frame(1024);
        label << "w=" << w << " d=2";
        got = metrics::disturbance(attacks::product_multipeak_attack(frame, attacks::flat_shape(w, {1, w + 1})),
                                   franson::SettingsBank({1, w + 1}))
                  .p_error;
    }
    return {formula, label.str(), expect, got, std::abs(got - expect) <= tol};
}

std::vector<VerifyResult> verify_default(double tol) {
    std::vector<VerifyResult> out;
    for (int l = 2; l <= 64; l *= 2)
        for (int dt = 1; dt <= 2 * l; ++dt) out.push_back(verify_one("window", {l, dt, 1, 0}, tol));
    for (int l : {8, 32}) out.push_back(verify_one("multipeak", {l, 3, 1, 0}, tol));
    for (int l : {8, 32})
        for (int d = 1; d <= 4; ++d) out.push_back(verify_one("multi_setting", {l, 3, d, 0}, tol));
    for (int w : {4, 8, 16}) out.push_back(verify_one("product", {0, 0, 1, w}, tol));
    return out;
}

//---------------------------------------------------------------------------//

namespace {

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    std::string preset;
    bool gate = false;
    // verify
    std::string formula;
    int window = 0;
    int dtau = 0;
    int settings = 1;
    int peaks = 0;
    // mub
    int depth = 0;
};

int cmd_sweep(const Options& o, std::ostream& out) {
    const auto started = std::chrono::steady_clock::now();
    if (o.config.empty() == o.preset.empty()) throw UsageError("sweep needs exactly one of --config or --preset");
    if (o.preset == "fig2") {
        emit(fig2_csv(), o.out, "sweep", json{{"preset", "fig2"}}, std::nullopt, started, out);
        return kOk;
    }
    if (o.preset == "table-sec6") {
        emit(table_sec6_csv(), o.out, "sweep", json{{"preset", "table-sec6"}}, std::nullopt, started, out);
        return kOk;
    }
    json doc;
    if (!o.preset.empty()) {
        auto p = sweep_preset(o.preset);
        if (!p) throw UsageError("unknown sweep preset: " + o.preset);
        doc = *p;
    } else {
        doc = read_json_file(o.config);
    }
    const auto config = sweep_config_from_json(doc);
    emit(run_sweep(config, o.threads), o.out, "sweep", doc, std::nullopt, started, out);
    return kOk;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
    const auto started = std::chrono::steady_clock::now();
    if (o.config.empty() == o.preset.empty()) throw UsageError("simulate needs exactly one of --config or --preset");
    json doc;
    if (!o.preset.empty()) {
        auto p = simulate_preset(o.preset);
        if (!p) throw UsageError("unknown simulate preset: " + o.preset);
        doc = *p;
    } else {
        doc = read_json_file(o.config);
    }
    if (o.seed) {
        doc["seed"] = *o.seed;
    } else if (const char* env = std::getenv("FRANSON_SEC_SEED")) {
        doc["seed"] = parse_seed(env, "FRANSON_SEC_SEED");
    }
    const auto config = mcsim::config_from_json(doc);
    const auto stats = mcsim::run_protocol(config, o.threads);
    const auto exact = mcsim::expected_disturbance(config);

    json result = {{"schema", kSimulationSchema},
                   {"config", mcsim::to_json(config)},
                   {"stats", mcsim::to_json(stats)},
                   {"exact", metrics::to_json(exact)},
                   {"expected_matched_fraction", format_number(mcsim::expected_matched_fraction(config))}};
    bool gate_ok = true;
    try {
        const auto z = mcsim::compare_to_exact(stats, config, exact);
        result["z"] = {{"p_error", format_number(z.p_error)}, {"matched_fraction", format_number(z.matched_fraction)}};
        gate_ok = std::abs(z.p_error) <= 3.0 && std::abs(z.matched_fraction) <= 3.0;
    } catch (const std::domain_error& e) {
        result["z"] = nullptr;
        result["z_note"] = e.what();
        // Zero variance: only an exact agreement passes.
        try {
            gate_ok = stats.p_error() == exact.p_error;
        } catch (const std::domain_error&) {
            gate_ok = false;
        }
    }
    emit(result.dump(2) + "\n", o.out, "simulate", mcsim::to_json(config), config.seed, started, out);
    if (o.gate && !gate_ok) {
        err << "gate failed: empirical statistics are more than 3 sigma from the exact values\n";
        return kVerificationFailed;
    }
    return kOk;
}

int cmd_verify(const Options& o, std::ostream& out) {
    const auto started = std::chrono::steady_clock::now();
    std::vector<VerifyResult> results;
    if (!o.formula.empty()) {
        if (o.formula != "window" && o.formula != "multipeak" && o.formula != "multi_setting" && o.formula != "product")
            throw UsageError("unknown formula: " + o.formula);
        try {
            results.push_back(verify_one(o.formula, {o.window, o.dtau, o.settings, o.peaks}));
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    } else {
        results = verify_default();
    }
    bool all = true;
    std::ostringstream text;
    json report = {{"schema", kVerifySchema}, {"cases", json::array()}};
    for (const auto& r : results) {
        all = all && r.passed;
        text << (r.passed ? "PASS " : "FAIL ") << r.formula << ' ' << r.label
             << " closed_form=" << format_number(r.closed_form) << " enumerated=" << format_number(r.enumerated)
             << '\n';
        report["cases"].push_back({{"formula", r.formula},
                                   {"case", r.label},
                                   {"closed_form", format_number(r.closed_form)},
                                   {"enumerated", format_number(r.enumerated)},
                                   {"passed", r.passed}});
    }
    report["passed"] = all;
    out << text.str();
    if (!o.out.empty())
        emit(report.dump(2) + "\n", o.out, "verify", json{{"formula", o.formula}}, std::nullopt, started, out);
    return all ? kOk : kVerificationFailed;
}

int cmd_mub(const Options& o, std::ostream& out, std::ostream& err) {
    const auto started = std::chrono::steady_clock::now();
    if (o.depth < 1 || o.depth > 12) throw UsageError("--N must lie in [1, 12]");
    mubnet::MubNetwork net = [&] {
        try {
            return mubnet::synthesize_network(o.depth);
        } catch (const mubnet::SynthesisError& e) {
            err << "synthesis failed: " << e.what() << '\n';
            throw;
        }
    }();
    json doc = mubnet::to_json(net);
    bool ok = true;
    if (o.depth <= 5) {
        const auto cert = mubnet::certify(net);
        doc["certification"] = mubnet::to_json(cert);
        ok = cert.passed(1e-10);
        out << "N=" << o.depth << " blocks=" << net.num_blocks() << " gram=" << format_number(cert.gram_deviation)
            << " unbiased=" << format_number(cert.unbiased_deviation)
            << " target=" << format_number(cert.target_deviation)
            << " completeness=" << format_number(cert.completeness_deviation) << (ok ? " PASS" : " FAIL") << '\n';
    } else {
        doc["certification"] = nullptr;
        out << "N=" << o.depth << " blocks=" << net.num_blocks() << " (certification covers N <= 5)\n";
    }
    if (!o.out.empty()) emit(doc.dump(2) + "\n", o.out, "mub", json{{"N", o.depth}}, std::nullopt, started, out);
    else out << doc.dump(2) << '\n';
    return ok ? kOk : kVerificationFailed;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Security analysis of Franson-interferometer time-bin QKD", "franson_sec"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--out", o.out, "Output path (a manifest is written next to it)");
        sub->add_option("--threads", o.threads, "Worker threads, 0 = hardware concurrency");
    };
    auto* sweep = app.add_subcommand("sweep", "Information-disturbance curve");
    sweep->add_option("--config", o.config, "Sweep configuration JSON")->check(CLI::ExistingFile);
    sweep->add_option("--preset", o.preset, "fig2, fig3, fig5 or table-sec6");
    common(sweep);

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo protocol run");
    simulate->add_option("--config", o.config, "Protocol configuration JSON")->check(CLI::ExistingFile);
    simulate->add_option("--preset", o.preset, "no-attack, sharp, flat-multipeak or wrong-spacing");
    simulate->add_option("--seed", o.seed, "Seed (falls back to FRANSON_SEC_SEED, then the config)");
    simulate->add_flag("--gate", o.gate, "Exit 2 if any |z| > 3");
    common(simulate);

    auto* verify = app.add_subcommand("verify", "Closed forms against enumeration");
    verify->add_option("--formula", o.formula, "window, multipeak, multi_setting or product");
    verify->add_option("--L", o.window, "Window or peak count");
    verify->add_option("--dtau", o.dtau, "Interferometer delay (Eve's spacing for multipeak)");
    verify->add_option("--d", o.settings, "Number of settings");
    verify->add_option("--w", o.peaks, "Peaks per axis");
    common(verify);

    auto* mub = app.add_subcommand("mub", "Synthesize the Fourier-basis network");
    mub->add_option("--N", o.depth, "Depth (M = 2^N)")->required();
    common(mub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return kUsage;
    }

    try {
        if (*sweep) return cmd_sweep(o, out);
        if (*simulate) return cmd_simulate(o, out, err);
        if (*verify) return cmd_verify(o, out);
        if (*mub) return cmd_mub(o, out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const mubnet::SynthesisError&) {
        return kVerificationFailed;
    } catch (const json::exception& e) {
        err << "invalid configuration: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        err << "invalid configuration: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

} // namespace fqkd::cli
