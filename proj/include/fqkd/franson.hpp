// Franson interferometer statistics for time-binned biphotons.
#pragma once

#include <array>
#include <vector>

#include "fqkd/statevec.hpp"

namespace fqkd::franson {

enum class Party { alice, bob };

/// Output ports of the interferometer: D2 is the sum port, D3 the
/// difference port.
enum class Detector { d2 = 0, d3 = 1 };

inline int sign_of(Detector d) { return d == Detector::d2 ? +1 : -1; }

/// Path difference of one party's interferometer, in bins.
struct FransonSetting {
    int delta_tau;
    Party party = Party::alice;

    /// Throws std::invalid_argument unless 1 <= delta_tau < M.
    void validate(const FrameSpec& frame) const;
};

/// The d path differences shared by Alice and Bob.
class SettingsBank {
public:
    explicit SettingsBank(std::vector<int> delays);

    const std::vector<int>& delays() const { return delays_; }
    std::size_t size() const { return delays_.size(); }
    void validate(const FrameSpec& frame) const;

private:
    std::vector<int> delays_;
};

/// (|m> + s|m - dtau>)/sqrt(2). In truncated mode an out-of-frame partner
/// is dropped and the result is flagged sub-normalized; in cyclic mode the
/// partner wraps to m - dtau + M.
SinglePhotonState projection_state(const FrameSpec& frame, Bin m, const FransonSetting& setting,
                                   Detector port, IndexingMode mode = IndexingMode::truncated);

/// Same-bin coincidence weights |<s_A, r| <s_B, r| psi>|^2 per bin r.
class CoincidenceTable {
public:
    struct BinWeights {
        Bin r;
        std::array<double, 4> w{}; // index 2*alice + bob, D2 = 0, D3 = 1

        double& at(Detector a, Detector b) { return w[2 * int(a) + int(b)]; }
        double at(Detector a, Detector b) const { return w[2 * int(a) + int(b)]; }
        double match() const { return w[0] + w[3]; }
        double mismatch() const { return w[1] + w[2]; }
    };

    /// Bins entering the conditional statistics, sorted by r.
    const std::vector<BinWeights>& bins() const { return bins_; }
    /// Bins whose projection states were sub-normalized (truncated mode).
    const std::vector<BinWeights>& edge_bins() const { return edge_; }

    double weight(Detector a, Detector b, Bin r) const;
    double total_weight() const { return match_ + mismatch_; }
    double match_weight() const { return match_; }
    double mismatch_weight() const { return mismatch_; }
    double edge_weight() const;

    /// Adds `scale` times every entry of `other` (bin by bin).
    void accumulate(const CoincidenceTable& other, double scale);

private:
    friend CoincidenceTable make_table(std::vector<BinWeights>, std::vector<BinWeights>);
    std::vector<BinWeights> bins_;
    std::vector<BinWeights> edge_;
    double match_ = 0.0;
    double mismatch_ = 0.0;
};

CoincidenceTable coincidence_table(const BiphotonState& state, const FransonSetting& alice,
                                   const FransonSetting& bob,
                                   IndexingMode mode = IndexingMode::truncated);

/// Probability-weighted sum of the component tables.
CoincidenceTable coincidence_table(const Mixture& mixture, const FransonSetting& alice,
                                   const FransonSetting& bob,
                                   IndexingMode mode = IndexingMode::truncated);

/// P(A != B) conditioned on a same-bin coincidence. Throws std::domain_error
/// when the table carries no weight.
double p_error(const CoincidenceTable& table);
double p_error(const BiphotonState& state, const FransonSetting& alice, const FransonSetting& bob,
               IndexingMode mode = IndexingMode::truncated);
double p_error(const Mixture& mixture, const FransonSetting& alice, const FransonSetting& bob,
               IndexingMode mode = IndexingMode::truncated);

/// V = 1 - 2p for p in [0, 1/2].
double visibility(double p);

/// Joint detection density for continuous emission times. Uses the squared
/// modulus of the four-term amplitude with the 1/4 mode prefactor, so the
/// overall factor is 1/16.
double joint_detection_continuous(const EnvelopeFunction& g, double t_a, double t_b,
                                  double dtau_a, double dtau_b, Detector det_a, Detector det_b);

} // namespace fqkd::franson
