// Information and disturbance figures of merit for diagonal attacks.
#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fqkd/attacks.hpp"
#include "fqkd/franson.hpp"

namespace fqkd::metrics {

/// Mutual information I(K;N) in bits between Eve's outcome K and the shared
/// bin N, with N uniform over the frame and P(k|n) = lambda_{k,n}.
double eve_information(const attacks::DiagonalAttack& attack);

/// Shannon entropy in bits, 0 log 0 = 0.
double entropy_bits(std::span<const double> probabilities);

/// How the d per-setting error rates are combined.
enum class Convention {
    raw_average,          ///< each setting weighted 1/d
    coincidence_weighted, ///< pooled mismatch weight over pooled coincidence weight
};

const char* to_string(Convention c);
Convention convention_from_string(const std::string& name);

struct SettingDisturbance {
    int delta_tau;
    double p_error;
    double coincidence_weight;
};

struct DisturbanceReport {
    double p_error = 0.0;
    double visibility = 1.0;
    std::vector<SettingDisturbance> per_setting;
    Convention convention = Convention::raw_average;
};

/// Error rate of an arbitrary ensemble checked with equal settings on
/// both sides, one setting at a time.
DisturbanceReport disturbance(const Mixture& mixture, const franson::SettingsBank& bank,
                              Convention convention, IndexingMode mode);

/// Applies `attack` to the uniform biphoton, mixes over outcomes and
/// evaluates every setting of `bank`. The frame boundary follows the
/// attack's indexing mode.
DisturbanceReport disturbance(const attacks::DiagonalAttack& attack,
                              const franson::SettingsBank& bank,
                              Convention convention = Convention::raw_average);

nlohmann::json to_json(const DisturbanceReport& report);

struct OracleParams {
    int window = 0;   // L for "window" and "multipeak"/"multi_setting"
    int delta_tau = 0;
    int settings = 1; // d
    int peaks_per_axis = 0; // w
};

/// Closed-form error rates:
///   window        dtau/(2L) for dtau < L, 1/2 otherwise
///   multipeak     1/(2L)
///   multi_setting ((d-1)L + 1)/(2dL)
///   product       1/(2w)
/// Throws std::invalid_argument on an unknown name or bad parameters.
double closed_form(std::string_view name, const OracleParams& params);

struct InfoDisturbancePoint {
    double param;
    double eve_bits;
    double p_error;
};

using AttackFamily = std::function<attacks::DiagonalAttack(double)>;

/// One point per grid value, in grid order. Points are evaluated on up to
/// `threads` workers (0 = hardware concurrency).
std::vector<InfoDisturbancePoint> info_disturbance_curve(const AttackFamily& family,
                                                         std::span<const double> grid,
                                                         const franson::SettingsBank& bank,
                                                         Convention convention = Convention::raw_average,
                                                         unsigned threads = 0);

/// Keeps only points not dominated by a point with more bits and no more
/// disturbance, sorted by eve_bits.
std::vector<InfoDisturbancePoint> monotone_envelope(std::vector<InfoDisturbancePoint> points);

/// Largest eve_bits among points with p_error <= p_max, or -1 if none.
double max_bits_below(std::span<const InfoDisturbancePoint> points, double p_max);

/// CSV with header `param,eve_bits,p_error,visibility`, 12 significant
/// digits, preceded by a `# schema=...` line.
std::string curve_to_csv(std::span<const InfoDisturbancePoint> points);

inline constexpr const char* kCurveSchema = "fqkd.curve/1";
inline constexpr const char* kReportSchema = "fqkd.report/1";

/// Width a of the Gaussian window whose information equals `target_bits`,
/// by bisection on a.
double match_gaussian_window_width(const FrameSpec& frame, double target_bits,
                                   IndexingMode mode = IndexingMode::cyclic);

} // namespace fqkd::metrics
