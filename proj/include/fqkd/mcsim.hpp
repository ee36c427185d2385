// Monte Carlo simulation of the time-bin protocol with Franson security
// checks and an intercept-resend eavesdropper.
#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "json.hpp"

#include "fqkd/attack_spec.hpp"
#include "fqkd/franson.hpp"
#include "fqkd/metrics.hpp"

namespace fqkd::mcsim {

/// Independent random stream for one (seed, frame, role) triple. The
/// stream is SplitMix64 started from a key mixed from the triple, so any
/// frame can be simulated without touching the others.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, std::uint64_t index, std::uint32_t role);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    /// Uniform integer in [0, n), n > 0.
    std::uint64_t below(std::uint64_t n);

private:
    std::uint64_t state_;
};

enum class Role : std::uint32_t { source = 0, eve = 1, alice = 2, bob = 3, detection = 4, timing = 5 };

struct ProtocolConfig {
    FrameSpec frame{1024};
    double p_timing = 0.9;
    franson::SettingsBank bank{{1}};
    attacks::AttackSpec attack;
    double intercept_fraction = 1.0;
    std::uint64_t n_frames = 1'000'000;
    std::uint64_t seed = 1;
    /// Frame boundary of the security check; defaults to the attack's
    /// indexing mode (cyclic with no attack).
    std::optional<IndexingMode> boundary;

    /// Throws std::invalid_argument on out-of-range fields.
    void validate() const;
    IndexingMode effective_boundary() const;
};

ProtocolConfig config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ProtocolConfig& config);

struct SettingCounts {
    int delta_tau = 0;
    /// Indexed 2*alice + bob with D2 = 0, D3 = 1.
    std::array<std::uint64_t, 4> counts{};
    std::uint64_t mismatches() const { return counts[1] + counts[2]; }
    std::uint64_t total() const { return counts[0] + counts[1] + counts[2] + counts[3]; }

    friend bool operator==(const SettingCounts&, const SettingCounts&) = default;
};

struct SiftedStats {
    std::uint64_t frames = 0;
    std::uint64_t intercepted = 0;
    std::uint64_t timing_coincidences = 0;
    std::uint64_t timing_mismatches = 0;
    std::vector<SettingCounts> per_setting;
    std::uint64_t discarded_basis = 0;     // one party timed, the other checked
    std::uint64_t discarded_setting = 0;   // different path differences
    std::uint64_t discarded_cross_bin = 0; // clicks in different bins
    std::uint64_t discarded_edge = 0;      // frame-edge bins (truncated boundary)

    std::uint64_t discarded() const;
    std::uint64_t security_checks() const;
    std::uint64_t security_mismatches() const;
    /// Frames in which both parties chose the same measurement (timing, or
    /// the interferometer with the same setting).
    std::uint64_t matched_basis() const;

    double p_error() const;
    /// sqrt(p (1 - p) / n) over the same-bin security checks.
    double p_error_stderr() const;
    double timing_error_rate() const;
    double matched_fraction() const;

    /// Adds counts; associative and commutative.
    void merge(const SiftedStats& other);

    friend bool operator==(const SiftedStats&, const SiftedStats&) = default;
};

nlohmann::json to_json(const SiftedStats& stats);

/// Precomputed Born-rule tables for one configuration; reusable across
/// seeds and frame counts.
class Simulator {
public:
    explicit Simulator(ProtocolConfig config);
    ~Simulator();
    Simulator(Simulator&&) noexcept;
    Simulator& operator=(Simulator&&) noexcept;

    const ProtocolConfig& config() const { return config_; }

    /// Frames [0, n_frames) of stream `seed` on `threads` workers
    /// (0 = hardware concurrency). The result does not depend on `threads`.
    SiftedStats run(std::uint64_t seed, std::uint64_t n_frames, unsigned threads = 1) const;
    SiftedStats run(unsigned threads = 1) const { return run(config_.seed, config_.n_frames, threads); }

private:
    struct Tables;
    ProtocolConfig config_;
    std::unique_ptr<const Tables> tables_;
};

/// Simulator(config).run(threads).
SiftedStats run_protocol(const ProtocolConfig& config, unsigned threads = 1);

/// Exact error rate of the simulated ensemble: a (1 - f, f) mixture of the
/// untouched source and the attacked ensemble, pooled over settings.
metrics::DisturbanceReport expected_disturbance(const ProtocolConfig& config);

/// p_T^2 + (1 - p_T)^2 / d.
double expected_matched_fraction(const ProtocolConfig& config);

struct ZScores {
    double p_error;
    double matched_fraction;
};

/// (empirical - exact) / sigma per quantity, sigma from the empirical
/// binomial standard error. Throws std::domain_error when that is zero.
ZScores compare_to_exact(const SiftedStats& stats, const ProtocolConfig& config,
                         const metrics::DisturbanceReport& exact);

inline constexpr const char* kStatsSchema = "fqkd.stats/1";

} // namespace fqkd::mcsim
