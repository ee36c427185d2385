// Trees of unbalanced interferometers that project a time-bin photon onto
// the Fourier basis exp(2 pi i n k / M) / sqrt(M), M = 2^N.
//
// Nodes are heap-indexed: node 0 is the root, the plus output of node i
// feeds node 2i+1 and the minus output feeds node 2i+2. Row r (1-based)
// holds nodes 2^(r-1) - 1 .. 2^r - 2.
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "fqkd/statevec.hpp"

namespace fqkd::mubnet {

enum class Port { plus = 0, minus = 1 };

struct FransonBlock {
    int delay = 1;      // L in bins
    double theta = 0.0; // phase on the long arm, [0, 2 pi)

    /// Throws std::invalid_argument unless L >= 1 and theta in [0, 2 pi).
    void validate() const;
};

/// out_port(t) = direct * a(t) + delayed * a(t - L).
struct BlockTransfer {
    int delay;
    std::array<Complex, 2> direct;  // indexed by Port
    std::array<Complex, 2> delayed; // indexed by Port
};

/// plus(t) = (a(t) + e^{i theta} a(t-L)) / 2, minus(t) = (a(t) - e^{i theta} a(t-L)) / 2.
BlockTransfer block_transfer(const FransonBlock& block);

/// Output slot amplitudes of one port for input slot amplitudes `a`
/// (slot t at index t). The result has a.size() + L slots.
std::vector<Complex> propagate(const FransonBlock& block, std::span<const Complex> a, Port port);

class SynthesisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MubNetwork {
public:
    struct Node {
        FransonBlock block;
        int phase_index; // theta = 2 pi phase_index / M
    };
    struct Output {
        std::size_t node; // leaf block
        Port port;
        int k;            // Fourier index measured by this output
        int slot;         // designated detection slot
    };

    /// Throws std::invalid_argument on a malformed tree.
    MubNetwork(int depth, std::vector<Node> nodes, std::vector<Output> outputs);

    int depth() const { return depth_; }
    int num_bins() const { return 1 << depth_; }
    std::size_t num_blocks() const { return nodes_.size(); }
    const std::vector<Node>& nodes() const { return nodes_; }
    /// Sorted by k.
    const std::vector<Output>& outputs() const { return outputs_; }

    static int row_of(std::size_t node);

private:
    int depth_;
    std::vector<Node> nodes_;
    std::vector<Output> outputs_;
};

/// Radix-2 construction: row r uses delay 2^(N-r); the node reached with
/// Fourier residue q (mod 2^(r-1)) gets theta = 2 pi q / 2^r. Needs 1 <= N <= 12.
MubNetwork synthesize_network(int depth);

/// Picks every node phase by exhaustive search over {2 pi m / M}, keeping
/// the first m for which both outputs carry a Fourier pattern. Needs
/// 1 <= N <= 4; throws SynthesisError naming the node if no phase works.
MubNetwork search_phases(int depth);

/// Coefficient c(u) of a(t - u) in the amplitude at the end of a path,
/// u in [0, M). `path` lists (node, port) from the root.
std::vector<Complex> path_response(const MubNetwork& net,
                                   std::span<const std::pair<std::size_t, Port>> path);

/// Root-to-leaf path of an output.
std::vector<std::pair<std::size_t, Port>> output_path(const MubNetwork& net, const MubNetwork::Output& out);

struct PovmElement {
    int k;     // Fourier index, or -1 for a terminator
    int slot;
    std::vector<Complex> vector; // amplitude at the slot is <vector|a>
    double success_probability;  // |vector|^2
};

/// Measurement vector of a path end at slot t: v(n) = conj(c(t - n)).
PovmElement slot_element(const MubNetwork& net, std::span<const std::pair<std::size_t, Port>> path,
                         int k, int slot);

/// One element per output at its designated slot, in k order.
std::vector<PovmElement> effective_povm(const MubNetwork& net);

/// Every output at every slot with support (0 .. 2M - 2).
std::vector<PovmElement> all_slot_elements(const MubNetwork& net);

/// max |sum_e |v_e><v_e| - I| over matrix entries.
double completeness_deviation(std::span<const PovmElement> elements, int num_bins);

struct Certification {
    double gram_deviation = 0.0;       // normalized vectors vs identity
    double unbiased_deviation = 0.0;   // |<n|v>|^2 vs 1/M
    double target_deviation = 0.0;     // distance to the Fourier state, phase aligned
    double completeness_deviation = 0.0;
    double success_probability = 0.0;  // smallest over outputs

    bool passed(double tol) const;
};

Certification certify(const MubNetwork& net);

/// The root-to-leaf path for one output; every side output along it is
/// terminated in a detector.
struct SingleBranch {
    int depth;
    int k;
    std::vector<std::pair<std::size_t, Port>> path;
    std::vector<FransonBlock> blocks;
    /// Side outputs that end in a detector, as path prefixes.
    std::vector<std::vector<std::pair<std::size_t, Port>>> terminators;
};

SingleBranch single_branch(const MubNetwork& net, int k);

struct BranchPovm {
    PovmElement retained;             // designated slot of the kept output
    std::vector<PovmElement> others;  // terminators and non-designated slots
};

BranchPovm effective_povm(const MubNetwork& net, const SingleBranch& branch);

nlohmann::json to_json(const MubNetwork& net);
nlohmann::json to_json(const Certification& cert);

inline constexpr const char* kNetlistSchema = "fqkd.mubnet/1";

} // namespace fqkd::mubnet
