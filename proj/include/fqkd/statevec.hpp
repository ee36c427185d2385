// Time-bin Hilbert space primitives: frames, single-photon and biphoton
// states, the Fourier (mutually unbiased) basis and continuous envelopes.
#pragma once

#include <complex>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace fqkd {

using Complex = std::complex<double>;
using Bin = int;

/// Bin arithmetic at the frame boundary. `cyclic` wraps indices mod M
/// (a periodic train of frames); `truncated` drops anything outside [0, M).
enum class IndexingMode { cyclic, truncated };

const char* to_string(IndexingMode mode);
IndexingMode indexing_mode_from_string(const std::string& name);

/// Wraps `bin` into [0, M).
inline Bin wrap_bin(long long bin, Bin num_bins) {
    long long r = bin % num_bins;
    return static_cast<Bin>(r < 0 ? r + num_bins : r);
}

class FrameSpec {
public:
    /// Throws std::invalid_argument unless num_bins >= 2 and bin_width > 0.
    explicit FrameSpec(Bin num_bins, double bin_width = 1.0);

    Bin num_bins() const { return num_bins_; }
    double bin_width() const { return bin_width_; }
    /// Frame duration M*T.
    double extent() const { return num_bins_ * bin_width_; }
    bool contains(long long bin) const { return bin >= 0 && bin < num_bins_; }

    friend bool operator==(const FrameSpec&, const FrameSpec&) = default;

private:
    Bin num_bins_;
    double bin_width_;
};

/// Sparse single-photon amplitude vector over the time bins of a frame.
/// Sub-normalized vectors are allowed and flagged (frame-edge projections).
class SinglePhotonState {
public:
    struct Entry {
        Bin bin;
        Complex amplitude;
    };

    SinglePhotonState(FrameSpec frame, std::vector<Entry> entries);

    const FrameSpec& frame() const { return frame_; }
    const std::vector<Entry>& entries() const { return entries_; }
    Complex amplitude(Bin bin) const;
    double norm2() const;
    bool subnormalized() const { return subnormalized_; }

private:
    FrameSpec frame_;
    std::vector<Entry> entries_; // sorted by bin, no duplicates
    bool subnormalized_ = false;
};

/// Sparse two-photon amplitudes keyed by ordered (Alice bin, Bob bin) pairs.
class BiphotonState {
public:
    struct Entry {
        Bin a;
        Bin b;
        Complex amplitude;
    };

    enum class Normalize { none, renormalize, require };

    /// Duplicate pairs are summed and exact zeros dropped. With
    /// `require`, the squared norm must be 1 within 1e-12.
    BiphotonState(FrameSpec frame, std::vector<Entry> entries,
                  Normalize policy = Normalize::require);

    const FrameSpec& frame() const { return frame_; }
    const std::vector<Entry>& entries() const { return entries_; }
    Complex amplitude(Bin a, Bin b) const;
    double norm2() const;
    bool normalized() const { return normalized_; }
    std::size_t support_size() const { return entries_.size(); }

    /// Reduced probability of Bob's bin `b`.
    double bob_marginal(Bin b) const;

private:
    FrameSpec frame_;
    std::vector<Entry> entries_; // sorted by (a, b)
    bool normalized_ = false;
};

/// Probability-weighted ensemble of pure biphoton states.
struct WeightedState {
    double probability;
    BiphotonState state;
};
using Mixture = std::vector<WeightedState>;

/// Continuous two-time envelope g(t1, t2) with square support
/// [t_min, t_max]^2. `resolution` is the number of quadrature samples per
/// bin width along each axis.
struct EnvelopeFunction {
    std::function<Complex(double, double)> eval;
    double t_min = 0.0;
    double t_max = 0.0;
    int resolution = 16;

    Complex operator()(double t1, double t2) const { return eval(t1, t2); }
};

BiphotonState uniform_biphoton(const FrameSpec& frame);

/// Fourier basis state exp(2 pi i n k / M) / sqrt(M).
SinglePhotonState mub_basis_state(const FrameSpec& frame, Bin n);

SinglePhotonState basis_state(const FrameSpec& frame, Bin k);

/// Conjugate-linear in the first argument. Throws on frame mismatch.
Complex inner_product(const SinglePhotonState& a, const SinglePhotonState& b);
Complex inner_product(const BiphotonState& a, const BiphotonState& b);

/// Midpoint-rule estimate of the squared norm of g over its support.
double envelope_norm2(const EnvelopeFunction& g, double bin_width);

/// Projects g onto the bin-product basis: the amplitude on (m, n) is the
/// integral of g over the bin rectangle divided by T. The result is
/// renormalized. Throws std::invalid_argument if the support leaves the
/// frame.
BiphotonState discretize_envelope(const EnvelopeFunction& g, const FrameSpec& frame);

} // namespace fqkd
