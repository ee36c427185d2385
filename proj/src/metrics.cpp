#include "fqkd/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "fqkd/format.hpp"

namespace fqkd::metrics {

double entropy_bits(std::span<const double> probabilities) {
    double h = 0.0;
    for (double p : probabilities)
        if (p > 0.0) h -= p * std::log2(p);
    return h;
}

double eve_information(const attacks::DiagonalAttack& attack) {
    const double prior = 1.0 / attack.frame().num_bins();
    double info = 0.0;
    for (const auto& row : attack.rows()) {
        double pk = 0.0;
        for (const auto& w : row) pk += w.lambda;
        pk *= prior;
        if (pk <= 0.0) continue;
        for (const auto& w : row)
            if (w.lambda > 0.0) info += prior * w.lambda * std::log2(w.lambda / pk);
    }
    return std::max(0.0, info);
}

const char* to_string(Convention c) {
    return c == Convention::raw_average ? "raw_average" : "coincidence_weighted";
}

Convention convention_from_string(const std::string& name) {
    if (name == "raw_average") return Convention::raw_average;
    if (name == "coincidence_weighted") return Convention::coincidence_weighted;
    throw std::invalid_argument("unknown convention: " + name);
}

DisturbanceReport disturbance(const Mixture& mixture, const franson::SettingsBank& bank,
                              Convention convention, IndexingMode mode) {
    DisturbanceReport report;
    report.convention = convention;
    double raw = 0.0;
    double pooled_mismatch = 0.0;
    double pooled_total = 0.0;
    for (int dtau : bank.delays()) {
        const franson::FransonSetting alice{dtau, franson::Party::alice};
        const franson::FransonSetting bob{dtau, franson::Party::bob};
        const auto table = franson::coincidence_table(mixture, alice, bob, mode);
        const double p = franson::p_error(table);
        report.per_setting.push_back({dtau, p, table.total_weight()});
        raw += p;
        pooled_mismatch += table.mismatch_weight();
        pooled_total += table.total_weight();
    }
    report.p_error = convention == Convention::raw_average
                         ? raw / static_cast<double>(bank.size())
                         : pooled_mismatch / pooled_total;
    report.visibility = franson::visibility(report.p_error);
    return report;
}

DisturbanceReport disturbance(const attacks::DiagonalAttack& attack,
                              const franson::SettingsBank& bank, Convention convention) {
    bank.validate(attack.frame());
    const auto mixture = attacks::outcome_mixture(uniform_biphoton(attack.frame()), attack);
    return disturbance(mixture, bank, convention, attack.indexing_mode());
}

nlohmann::json to_json(const DisturbanceReport& report) {
    nlohmann::json settings = nlohmann::json::array();
    for (const auto& s : report.per_setting)
        settings.push_back({{"delta_tau", s.delta_tau},
                            {"p_error", format_number(s.p_error)},
                            {"coincidence_weight", format_number(s.coincidence_weight)}});
    return {{"schema", kReportSchema},
            {"p_error", format_number(report.p_error)},
            {"visibility", format_number(report.visibility)},
            {"convention", to_string(report.convention)},
            {"per_setting", settings}};
}

double closed_form(std::string_view name, const OracleParams& params) {
    auto positive = [](int v, const char* what) {
        if (v < 1) throw std::invalid_argument(std::string(what) + " must be >= 1");
        return static_cast<double>(v);
    };
    if (name == "window") {
        const double l = positive(params.window, "L");
        const double dt = positive(params.delta_tau, "dtau");
        return dt < l ? dt / (2.0 * l) : 0.5;
    }
    if (name == "multipeak") return 1.0 / (2.0 * positive(params.window, "L"));
    if (name == "multi_setting") {
        const double l = positive(params.window, "L");
        const double d = positive(params.settings, "d");
        return ((d - 1.0) * l + 1.0) / (2.0 * d * l);
    }
    if (name == "product") return 1.0 / (2.0 * positive(params.peaks_per_axis, "w"));
    throw std::invalid_argument("unknown closed-form oracle: " + std::string(name));
}

std::vector<InfoDisturbancePoint> info_disturbance_curve(const AttackFamily& family,
                                                         std::span<const double> grid,
                                                         const franson::SettingsBank& bank,
                                                         Convention convention, unsigned threads) {
    std::vector<InfoDisturbancePoint> points(grid.size());
    if (grid.empty()) return points;
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(grid.size()));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (std::size_t i = next++; i < grid.size() && !failed; i = next++) {
            try {
                const auto attack = family(grid[i]);
                points[i] = {grid[i], eve_information(attack),
                             disturbance(attack, bank, convention).p_error};
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    return points;
}

std::vector<InfoDisturbancePoint> monotone_envelope(std::vector<InfoDisturbancePoint> points) {
    std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
        return a.eve_bits != b.eve_bits ? a.eve_bits > b.eve_bits : a.p_error < b.p_error;
    });
    std::vector<InfoDisturbancePoint> out;
    double best_p = std::numeric_limits<double>::infinity();
    for (const auto& p : points) {
        if (p.p_error < best_p) {
            out.push_back(p);
            best_p = p.p_error;
        }
    }
    std::reverse(out.begin(), out.end());
    return out;
}

double max_bits_below(std::span<const InfoDisturbancePoint> points, double p_max) {
    double best = -1.0;
    for (const auto& p : points)
        if (p.p_error <= p_max) best = std::max(best, p.eve_bits);
    return best;
}

std::string curve_to_csv(std::span<const InfoDisturbancePoint> points) {
    std::ostringstream out;
    out << "# schema=" << kCurveSchema << '\n';
    out << "param,eve_bits,p_error,visibility\n";
    for (const auto& p : points) {
        out << format_number(p.param) << ',' << format_number(p.eve_bits) << ','
            << format_number(p.p_error) << ',' << format_number(1.0 - 2.0 * p.p_error) << '\n';
    }
    return out.str();
}

double match_gaussian_window_width(const FrameSpec& frame, double target_bits, IndexingMode mode) {
    auto bits = [&](double a) {
        return eve_information(attacks::gaussian_window_attack(frame, a, mode));
    };
    double lo = 1e-3;
    double hi = 1.0;
    if (bits(lo) < target_bits) throw std::invalid_argument("target exceeds the sharp-measurement information");
    while (bits(hi) > target_bits) {
        hi *= 2.0;
        if (hi > 1e12) throw std::invalid_argument("target information too small to match");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (bits(mid) > target_bits ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace fqkd::metrics
