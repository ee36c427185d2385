#include "fqkd/mubnet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fqkd/format.hpp"

namespace fqkd::mubnet {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double port_sign(Port p) { return p == Port::plus ? 1.0 : -1.0; }

void check_depth(int depth, int max_depth) {
    if (depth < 1 || depth > max_depth)
        throw std::invalid_argument("network depth must lie in [1, " + std::to_string(max_depth) + "]");
}

} // namespace

void FransonBlock::validate() const {
    if (delay < 1) throw std::invalid_argument("block delay must be >= 1");
    if (!(theta >= 0.0 && theta < kTwoPi)) throw std::invalid_argument("block phase must lie in [0, 2 pi)");
}

BlockTransfer block_transfer(const FransonBlock& block) {
    block.validate();
    const Complex e = std::polar(1.0, block.theta);
    return {block.delay, {0.5, 0.5}, {0.5 * e, -0.5 * e}};
}

std::vector<Complex> propagate(const FransonBlock& block, std::span<const Complex> a, Port port) {
    const auto tf = block_transfer(block);
    const auto p = static_cast<std::size_t>(port);
    const auto L = static_cast<std::size_t>(tf.delay);
    std::vector<Complex> out(a.size() + L);
    for (std::size_t t = 0; t < a.size(); ++t) {
        out[t] += tf.direct[p] * a[t];
        out[t + L] += tf.delayed[p] * a[t];
    }
    return out;
}

//---------------------------------------------------------------------------//

int MubNetwork::row_of(std::size_t node) {
    int r = 0;
    for (std::size_t x = node + 1; x > 0; x >>= 1) ++r;
    return r;
}

MubNetwork::MubNetwork(int depth, std::vector<Node> nodes, std::vector<Output> outputs)
    : depth_(depth), nodes_(std::move(nodes)), outputs_(std::move(outputs)) {
    check_depth(depth_, 30);
    const std::size_t m = std::size_t{1} << depth_;
    if (nodes_.size() != m - 1) throw std::invalid_argument("network must have 2^N - 1 blocks");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        nodes_[i].block.validate();
        if (nodes_[i].block.delay != 1 << (depth_ - row_of(i)))
            throw std::invalid_argument("block " + std::to_string(i) + " has the wrong delay for its row");
    }
    if (outputs_.size() != m) throw std::invalid_argument("network must have 2^N outputs");
    std::sort(outputs_.begin(), outputs_.end(), [](const Output& x, const Output& y) { return x.k < y.k; });
    std::vector<char> used(2 * m, 0);
    for (std::size_t k = 0; k < m; ++k) {
        const auto& o = outputs_[k];
        if (o.k != static_cast<int>(k)) throw std::invalid_argument("output labels must cover 0 .. M-1");
        if (o.node < m / 2 - 1 || o.node >= m - 1) throw std::invalid_argument("output is not on a leaf block");
        auto& u = used[2 * o.node + static_cast<std::size_t>(o.port)];
        if (u) throw std::invalid_argument("two outputs share a port");
        u = 1;
    }
}

namespace {

MubNetwork::Output leaf_output(int depth, std::size_t node, Port port, int k) {
    return {node, port, k, (1 << depth) - 1};
}

} // namespace

MubNetwork synthesize_network(int depth) {
    check_depth(depth, 12);
    const int m = 1 << depth;
    std::vector<MubNetwork::Node> nodes(static_cast<std::size_t>(m - 1));
    std::vector<int> residue(nodes.size(), 0); // k mod 2^(r-1) on arrival
    std::vector<MubNetwork::Output> outputs;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const int r = MubNetwork::row_of(i);
        const int q = residue[i];
        const int phase_index = q << (depth - r); // 2 pi q / 2^r in units of 2 pi / M
        nodes[i] = {{1 << (depth - r), kTwoPi * phase_index / m}, phase_index};
        const int plus_q = q;
        const int minus_q = q + (1 << (r - 1));
        if (r < depth) {
            residue[2 * i + 1] = plus_q;
            residue[2 * i + 2] = minus_q;
        } else {
            outputs.push_back(leaf_output(depth, i, Port::plus, plus_q));
            outputs.push_back(leaf_output(depth, i, Port::minus, minus_q));
        }
    }
    return MubNetwork(depth, std::move(nodes), std::move(outputs));
}

namespace {

// Residue q in [0, 2^r) with c(j 2^(N-r)) = c(0) exp(2 pi i q j / 2^r) for
// all j, or -1. Offsets off that lattice must vanish.
int fourier_residue(const std::vector<Complex>& c, int depth, int r) {
    const int stride = 1 << (depth - r);
    const int count = 1 << r;
    constexpr double tol = 1e-12;
    for (std::size_t u = 0; u < c.size(); ++u)
        if (u % static_cast<std::size_t>(stride) != 0 && std::abs(c[u]) > tol) return -1;
    if (!(std::abs(c[0]) > tol)) return -1;
    for (int q = 0; q < count; ++q) {
        bool ok = true;
        for (int j = 1; j < count && ok; ++j) {
            const Complex want = c[0] * std::polar(1.0, kTwoPi * q * j / count);
            ok = std::abs(c[static_cast<std::size_t>(j * stride)] - want) <= tol;
        }
        if (ok) return q;
    }
    return -1;
}

std::vector<Complex> extend(const std::vector<Complex>& c, const FransonBlock& block, Port port) {
    const auto tf = block_transfer(block);
    const auto p = static_cast<std::size_t>(port);
    std::vector<Complex> out(c.size());
    for (std::size_t u = 0; u < c.size(); ++u) {
        out[u] += tf.direct[p] * c[u];
        if (u + static_cast<std::size_t>(tf.delay) < c.size())
            out[u + static_cast<std::size_t>(tf.delay)] += tf.delayed[p] * c[u];
    }
    return out;
}

} // namespace

MubNetwork search_phases(int depth) {
    check_depth(depth, 4);
    const int m = 1 << depth;
    std::vector<MubNetwork::Node> nodes(static_cast<std::size_t>(m - 1));
    std::vector<std::vector<Complex>> incoming(nodes.size());
    incoming[0].assign(static_cast<std::size_t>(m), Complex{});
    incoming[0][0] = 1.0;
    std::vector<MubNetwork::Output> outputs;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const int r = MubNetwork::row_of(i);
        bool found = false;
        for (int idx = 0; idx < m && !found; ++idx) {
            const FransonBlock block{1 << (depth - r), kTwoPi * idx / m};
            auto plus = extend(incoming[i], block, Port::plus);
            auto minus = extend(incoming[i], block, Port::minus);
            const int qp = fourier_residue(plus, depth, r);
            const int qm = fourier_residue(minus, depth, r);
            if (qp < 0 || qm < 0 || qp == qm) continue;
            found = true;
            nodes[i] = {block, idx};
            if (r < depth) {
                incoming[2 * i + 1] = std::move(plus);
                incoming[2 * i + 2] = std::move(minus);
            } else {
                outputs.push_back(leaf_output(depth, i, Port::plus, qp));
                outputs.push_back(leaf_output(depth, i, Port::minus, qm));
            }
        }
        if (!found)
            throw SynthesisError("no phase in {2 pi m / " + std::to_string(m) + "} gives Fourier outputs at node " +
                                 std::to_string(i) + " (row " + std::to_string(r) + ")");
    }
    return MubNetwork(depth, std::move(nodes), std::move(outputs));
}

//---------------------------------------------------------------------------//

std::vector<Complex> path_response(const MubNetwork& net,
                                   std::span<const std::pair<std::size_t, Port>> path) {
    std::vector<Complex> c(static_cast<std::size_t>(net.num_bins()));
    c[0] = 1.0;
    std::size_t expect = 0;
    for (const auto& [node, port] : path) {
        if (node != expect || node >= net.num_blocks()) throw std::invalid_argument("path does not follow the tree");
        c = extend(c, net.nodes()[node].block, port);
        expect = 2 * node + 1 + static_cast<std::size_t>(port);
    }
    return c;
}

std::vector<std::pair<std::size_t, Port>> output_path(const MubNetwork&, const MubNetwork::Output& out) {
    std::vector<std::pair<std::size_t, Port>> path{{out.node, out.port}};
    for (std::size_t child = out.node; child != 0;) {
        const std::size_t parent = (child - 1) / 2;
        path.emplace_back(parent, child % 2 == 1 ? Port::plus : Port::minus);
        child = parent;
    }
    std::reverse(path.begin(), path.end());
    return path;
}

PovmElement slot_element(const MubNetwork& net, std::span<const std::pair<std::size_t, Port>> path,
                         int k, int slot) {
    const auto c = path_response(net, path);
    const int m = net.num_bins();
    PovmElement e{k, slot, std::vector<Complex>(static_cast<std::size_t>(m)), 0.0};
    for (int n = 0; n < m; ++n) {
        const int u = slot - n;
        if (u >= 0 && u < m) e.vector[static_cast<std::size_t>(n)] = std::conj(c[static_cast<std::size_t>(u)]);
    }
    for (const auto& v : e.vector) e.success_probability += std::norm(v);
    return e;
}

std::vector<PovmElement> effective_povm(const MubNetwork& net) {
    std::vector<PovmElement> out;
    for (const auto& o : net.outputs()) out.push_back(slot_element(net, output_path(net, o), o.k, o.slot));
    return out;
}

namespace {

void append_slots(const MubNetwork& net, std::span<const std::pair<std::size_t, Port>> path, int k,
                  int skip_slot, std::vector<PovmElement>& out) {
    const int m = net.num_bins();
    for (int t = 0; t <= 2 * m - 2; ++t) {
        if (t == skip_slot) continue;
        auto e = slot_element(net, path, k, t);
        if (e.success_probability > 0.0) out.push_back(std::move(e));
    }
}

} // namespace

std::vector<PovmElement> all_slot_elements(const MubNetwork& net) {
    std::vector<PovmElement> out;
    for (const auto& o : net.outputs()) append_slots(net, output_path(net, o), o.k, -1, out);
    return out;
}

double completeness_deviation(std::span<const PovmElement> elements, int num_bins) {
    const auto m = static_cast<std::size_t>(num_bins);
    std::vector<Complex> sum(m * m);
    for (const auto& e : elements) {
        if (e.vector.size() != m) throw std::invalid_argument("element dimension mismatch");
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) sum[i * m + j] += e.vector[i] * std::conj(e.vector[j]);
    }
    double dev = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            dev = std::max(dev, std::abs(sum[i * m + j] - Complex(i == j ? 1.0 : 0.0)));
    return dev;
}

bool Certification::passed(double tol) const {
    return gram_deviation <= tol && unbiased_deviation <= tol && target_deviation <= tol &&
           completeness_deviation <= tol;
}

Certification certify(const MubNetwork& net) {
    const int m = net.num_bins();
    const FrameSpec frame(m);
    const auto povm = effective_povm(net);
    std::vector<std::vector<Complex>> unit;
    Certification c;
    c.success_probability = 1.0;
    for (const auto& e : povm) {
        c.success_probability = std::min(c.success_probability, e.success_probability);
        const double norm = std::sqrt(e.success_probability);
        auto v = e.vector;
        for (auto& x : v) x /= norm;
        for (const auto& x : v) c.unbiased_deviation = std::max(c.unbiased_deviation, std::abs(std::norm(x) - 1.0 / m));
        const auto target = mub_basis_state(frame, e.k);
        Complex overlap{};
        std::vector<Complex> phi(static_cast<std::size_t>(m));
        for (const auto& t : target.entries()) phi[static_cast<std::size_t>(t.bin)] = t.amplitude;
        for (int n = 0; n < m; ++n) overlap += std::conj(phi[static_cast<std::size_t>(n)]) * v[static_cast<std::size_t>(n)];
        const Complex align = std::abs(overlap) > 0.0 ? std::conj(overlap) / std::abs(overlap) : Complex{1.0};
        double dist = 0.0;
        for (int n = 0; n < m; ++n)
            dist += std::norm(align * v[static_cast<std::size_t>(n)] - phi[static_cast<std::size_t>(n)]);
        c.target_deviation = std::max(c.target_deviation, std::sqrt(dist));
        unit.push_back(std::move(v));
    }
    for (std::size_t i = 0; i < unit.size(); ++i) {
        for (std::size_t j = 0; j < unit.size(); ++j) {
            Complex g{};
            for (std::size_t n = 0; n < unit[i].size(); ++n) g += std::conj(unit[i][n]) * unit[j][n];
            c.gram_deviation = std::max(c.gram_deviation, std::abs(g - Complex(i == j ? 1.0 : 0.0)));
        }
    }
    const auto all = all_slot_elements(net);
    c.completeness_deviation = completeness_deviation(all, m);
    return c;
}

//---------------------------------------------------------------------------//

SingleBranch single_branch(const MubNetwork& net, int k) {
    if (k < 0 || k >= net.num_bins()) throw std::out_of_range("leaf index outside [0, M)");
    const auto& out = net.outputs()[static_cast<std::size_t>(k)];
    SingleBranch b{net.depth(), k, output_path(net, out), {}, {}};
    for (std::size_t i = 0; i < b.path.size(); ++i) {
        b.blocks.push_back(net.nodes()[b.path[i].first].block);
        std::vector<std::pair<std::size_t, Port>> side(b.path.begin(), b.path.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        side.back().second = side.back().second == Port::plus ? Port::minus : Port::plus;
        b.terminators.push_back(std::move(side));
    }
    return b;
}

BranchPovm effective_povm(const MubNetwork& net, const SingleBranch& branch) {
    const auto& out = net.outputs()[static_cast<std::size_t>(branch.k)];
    BranchPovm p{slot_element(net, branch.path, branch.k, out.slot), {}};
    append_slots(net, branch.path, branch.k, out.slot, p.others);
    for (const auto& t : branch.terminators) append_slots(net, t, -1, -1, p.others);
    return p;
}

//---------------------------------------------------------------------------//

nlohmann::json to_json(const MubNetwork& net) {
    using nlohmann::json;
    json nodes = json::array();
    json edges = json::array();
    for (std::size_t i = 0; i < net.num_blocks(); ++i) {
        const auto& n = net.nodes()[i];
        nodes.push_back({{"id", i},
                         {"row", MubNetwork::row_of(i)},
                         {"delay", n.block.delay},
                         {"phase_index", n.phase_index},
                         {"theta", format_number(n.block.theta)}});
        for (Port p : {Port::plus, Port::minus}) {
            const std::size_t child = 2 * i + 1 + static_cast<std::size_t>(p);
            if (child < net.num_blocks())
                edges.push_back({{"from", i}, {"port", p == Port::plus ? "plus" : "minus"}, {"to", child}});
        }
    }
    json outputs = json::array();
    for (const auto& o : net.outputs())
        outputs.push_back({{"k", o.k},
                           {"node", o.node},
                           {"port", o.port == Port::plus ? "plus" : "minus"},
                           {"slot", o.slot}});
    return {{"schema", kNetlistSchema},
            {"depth", net.depth()},
            {"num_bins", net.num_bins()},
            {"num_blocks", net.num_blocks()},
            {"nodes", nodes},
            {"edges", edges},
            {"outputs", outputs}};
}

nlohmann::json to_json(const Certification& c) {
    return {{"gram_deviation", format_number(c.gram_deviation)},
            {"unbiased_deviation", format_number(c.unbiased_deviation)},
            {"target_deviation", format_number(c.target_deviation)},
            {"completeness_deviation", format_number(c.completeness_deviation)},
            {"success_probability", format_number(c.success_probability)}};
}

} // namespace fqkd::mubnet
