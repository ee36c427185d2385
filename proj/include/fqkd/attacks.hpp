// Eavesdropper measurements on Bob's photon.
//
// Every discrete attack here is diagonal in the time-bin basis,
// Pi_k = sum_n lambda_{k,n} |n><n|, and acts through the square-root Kraus
// operator sqrt(Pi_k) on Bob's half of the biphoton.
#pragma once

#include <functional>
#include <string>
#include <random>
#include <utility>
#include <vector>

#include "fqkd/statevec.hpp"

namespace fqkd::attacks {

class DiagonalAttack {
public:
    struct Weight {
        Bin bin;
        double lambda;
    };
    using Row = std::vector<Weight>;

    /// Rows are sorted and merged; negative weights or out-of-frame bins
    /// throw. Completeness is not enforced here, see validate_completeness.
    DiagonalAttack(FrameSpec frame, std::vector<Row> rows,
                   IndexingMode mode = IndexingMode::cyclic);

    const FrameSpec& frame() const { return frame_; }
    IndexingMode indexing_mode() const { return mode_; }
    std::size_t num_outcomes() const { return rows_.size(); }
    const Row& row(std::size_t k) const { return rows_.at(k); }
    const std::vector<Row>& rows() const { return rows_; }
    double lambda(std::size_t k, Bin n) const;

    /// Outcomes with nonzero weight on bin n, as (k, lambda_{k,n}).
    std::vector<std::pair<std::size_t, double>> column(Bin n) const;

private:
    FrameSpec frame_;
    std::vector<Row> rows_;
    IndexingMode mode_;
};

/// Peak weights for a multi-peak attack over a w^d grid of offsets.
/// Weights are stored with the first axis varying fastest.
class MultiPeakShape {
public:
    MultiPeakShape(int peaks_per_axis, std::vector<int> spacings, std::vector<double> weights);

    int peaks_per_axis() const { return peaks_; }
    const std::vector<int>& spacings() const { return spacings_; }
    const std::vector<double>& weights() const { return weights_; }
    std::size_t dimensions() const { return spacings_.size(); }
    std::size_t num_peaks() const { return weights_.size(); }

    /// Grid coordinates (n_1, ..., n_d) of flat peak index `i`.
    std::vector<int> coordinates(std::size_t i) const;

private:
    int peaks_;
    std::vector<int> spacings_;
    std::vector<double> weights_;
};

MultiPeakShape flat_shape(int peaks_per_axis, std::vector<int> spacings);

/// Readings of the peak-weight exponent exp(-alpha [n - (w-1)/2]).
enum class ExponentMode {
    squared,  ///< exp(-alpha (n - c)^2), a true Gaussian
    absolute, ///< exp(-alpha |n - c|)
    signed_,  ///< exp(-alpha (n - c)), taken literally
};

const char* to_string(ExponentMode mode);
ExponentMode exponent_mode_from_string(const std::string& name);

/// Product weights Gamma_{n_1..n_d} = prod_i f(n_i) / N with f the
/// per-axis profile. Throws unless alpha > 0.
MultiPeakShape gaussian_grid_weights(int peaks_per_axis, std::vector<int> spacings, double alpha,
                                     ExponentMode mode = ExponentMode::squared);

// For sharp and square-window attacks the weights do not depend on the
// indexing mode; it is carried along for the frame-boundary treatment of
// the disturbance analysis.
DiagonalAttack sharp_attack(const FrameSpec& frame, IndexingMode mode = IndexingMode::cyclic);

/// M/L windows of L consecutive bins. Throws unless L divides M.
DiagonalAttack square_window_attack(const FrameSpec& frame, int window,
                                    IndexingMode mode = IndexingMode::cyclic);

/// lambda_{k,n} = exp(-(k-n)^2 / a) / Z_n, with cyclic or open distance.
DiagonalAttack gaussian_window_attack(const FrameSpec& frame, double width,
                                      IndexingMode mode = IndexingMode::cyclic);

/// Outcome k weights bin k - n*spacing by Gamma_n. Needs a one-axis shape
/// with L*spacing < M. In truncated mode the weights are renormalized per
/// bin so the measurement stays complete.
DiagonalAttack multipeak_attack(const FrameSpec& frame, const MultiPeakShape& shape,
                                IndexingMode mode = IndexingMode::cyclic);

/// Outcome k weights bin k + sum_i n_i spacing_i by Gamma_{n_1..n_d}.
/// Offsets that coincide (mod M in cyclic mode) are an error in truncated
/// mode and merged in cyclic mode.
DiagonalAttack product_multipeak_attack(const FrameSpec& frame, const MultiPeakShape& shape,
                                        IndexingMode mode = IndexingMode::cyclic);

/// max_n |sum_k lambda_{k,n} - 1|.
double validate_completeness(const DiagonalAttack& attack);

struct AttackOutcome {
    std::size_t outcome;
    double probability;
    BiphotonState post_state;
};

/// Born probability of each outcome: sum_n lambda_{k,n} P_Bob(n).
std::vector<double> outcome_probabilities(const BiphotonState& state, const DiagonalAttack& attack);

/// Post-measurement state for a fixed outcome. Throws std::domain_error on
/// a zero-probability outcome and std::invalid_argument on frame mismatch.
AttackOutcome apply_attack(const BiphotonState& state, const DiagonalAttack& attack,
                           std::size_t outcome);

/// Samples the outcome from `rng`.
template <class Urbg>
AttackOutcome apply_attack(const BiphotonState& state, const DiagonalAttack& attack, Urbg& rng) {
    const auto probs = outcome_probabilities(state, attack);
    std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
    return apply_attack(state, attack, pick(rng));
}

/// Post-measurement ensemble: every outcome with nonzero probability,
/// paired with its normalized post-state.
Mixture outcome_mixture(const BiphotonState& state, const DiagonalAttack& attack);

//---------------------------------------------------------------------------//
// Continuous-time attacks

/// beta(t_e; t') >= 0 with unit integral over t_e for every t'.
/// `kinks(t')` lists the t_e locations where beta is discontinuous; beta
/// vanishes outside the span of the kinks.
struct ContinuousAttack {
    std::function<double(double t_e, double t_prime)> beta;
    std::function<std::vector<double>(double t_prime)> kinks;
};

/// Discrete-outcome variant beta_mu(t') with sum_mu beta_mu(t') = 1.
struct DiscreteContinuousAttack {
    std::vector<std::function<double(double t_prime)>> beta;
};

/// L square windows of width delta spaced by spacing:
/// beta(t_e; t') = 1/(L delta) on the union of [t_e - m spacing,
/// t_e - m spacing + delta), m = 0..L-1. Throws unless delta < spacing.
ContinuousAttack continuous_multipeak(double delta, double spacing, int peaks);

/// Localizes the photon to one of the frame's bins.
DiscreteContinuousAttack bin_localizing_attack(const FrameSpec& frame);

/// max over `probe_times` of |integral beta(t; t') dt - 1|. Integration is
/// composite midpoint between kinks with `samples` points per piece.
double validate_completeness(const ContinuousAttack& attack, const std::vector<double>& probe_times,
                             int samples = 64);
double validate_completeness(const DiscreteContinuousAttack& attack,
                             const std::vector<double>& probe_times);

/// Envelope after outcome t_e: sqrt(beta(t_e; t2)) g(t1, t2), not
/// renormalized.
EnvelopeFunction apply_continuous_attack(const EnvelopeFunction& g, const ContinuousAttack& attack,
                                         double t_e);

} // namespace fqkd::attacks
