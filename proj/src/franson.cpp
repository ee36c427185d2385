#include "fqkd/franson.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fqkd::franson {

void FransonSetting::validate(const FrameSpec& frame) const {
    if (delta_tau < 1 || delta_tau >= frame.num_bins())
        throw std::invalid_argument("interferometer delay must satisfy 1 <= dtau < M");
}

SettingsBank::SettingsBank(std::vector<int> delays) : delays_(std::move(delays)) {
    if (delays_.empty()) throw std::invalid_argument("settings bank is empty");
    auto sorted = delays_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("settings bank has repeated delays");
}

void SettingsBank::validate(const FrameSpec& frame) const {
    for (int d : delays_) FransonSetting{d}.validate(frame);
}

SinglePhotonState projection_state(const FrameSpec& frame, Bin m, const FransonSetting& setting,
                                   Detector port, IndexingMode mode) {
    if (!frame.contains(m)) throw std::out_of_range("projection bin outside frame");
    setting.validate(frame);
    const double amp = std::numbers::sqrt2 / 2.0;
    std::vector<SinglePhotonState::Entry> entries{{m, Complex{amp, 0.0}}};
    long long partner = static_cast<long long>(m) - setting.delta_tau;
    if (mode == IndexingMode::cyclic) partner = wrap_bin(partner, frame.num_bins());
    if (frame.contains(partner))
        entries.push_back({static_cast<Bin>(partner), Complex{sign_of(port) * amp, 0.0}});
    return SinglePhotonState(frame, std::move(entries));
}

//---------------------------------------------------------------------------//

CoincidenceTable make_table(std::vector<CoincidenceTable::BinWeights> bins,
                            std::vector<CoincidenceTable::BinWeights> edge) {
    CoincidenceTable t;
    t.bins_ = std::move(bins);
    t.edge_ = std::move(edge);
    for (const auto& b : t.bins_) {
        t.match_ += b.match();
        t.mismatch_ += b.mismatch();
    }
    return t;
}

double CoincidenceTable::weight(Detector a, Detector b, Bin r) const {
    auto it = std::lower_bound(bins_.begin(), bins_.end(), r,
                               [](const BinWeights& x, Bin key) { return x.r < key; });
    return (it != bins_.end() && it->r == r) ? it->at(a, b) : 0.0;
}

double CoincidenceTable::edge_weight() const {
    double s = 0.0;
    for (const auto& b : edge_) s += b.match() + b.mismatch();
    return s;
}

namespace {

void merge_into(std::vector<CoincidenceTable::BinWeights>& dst,
                const std::vector<CoincidenceTable::BinWeights>& src, double scale) {
    std::vector<CoincidenceTable::BinWeights> out;
    out.reserve(dst.size() + src.size());
    auto i = dst.begin();
    auto j = src.begin();
    while (i != dst.end() || j != src.end()) {
        if (j == src.end() || (i != dst.end() && i->r < j->r)) {
            out.push_back(*i++);
        } else {
            CoincidenceTable::BinWeights b{j->r, {}};
            if (i != dst.end() && i->r == j->r) b = *i++;
            for (int s = 0; s < 4; ++s) b.w[s] += scale * j->w[s];
            out.push_back(b);
            ++j;
        }
    }
    dst = std::move(out);
}

} // namespace

void CoincidenceTable::accumulate(const CoincidenceTable& other, double scale) {
    merge_into(bins_, other.bins_, scale);
    merge_into(edge_, other.edge_, scale);
    match_ = mismatch_ = 0.0;
    for (const auto& b : bins_) {
        match_ += b.match();
        mismatch_ += b.mismatch();
    }
}

namespace {

// One amplitude contribution to (r, s_A, s_B) before combining.
struct Contribution {
    Bin r;
    bool edge;
    std::array<Complex, 4> amp;
};

} // namespace

CoincidenceTable coincidence_table(const BiphotonState& state, const FransonSetting& alice,
                                   const FransonSetting& bob, IndexingMode mode) {
    const FrameSpec& frame = state.frame();
    alice.validate(frame);
    bob.validate(frame);
    const Bin m = frame.num_bins();
    const int da = alice.delta_tau;
    const int db = bob.delta_tau;

    // Alice's photon at bin a reaches projection bin r = a (short path,
    // coefficient +1) or r = a + da (long path, coefficient s_A). Same for Bob.
    std::vector<Contribution> contribs;
    contribs.reserve(4 * state.support_size());
    for (const auto& e : state.entries()) {
        for (int la = 0; la < 2; ++la) {
            long long ra = e.a + static_cast<long long>(la) * da;
            for (int lb = 0; lb < 2; ++lb) {
                long long rb = e.b + static_cast<long long>(lb) * db;
                if (mode == IndexingMode::cyclic) {
                    ra = wrap_bin(ra, m);
                    rb = wrap_bin(rb, m);
                }
                if (ra != rb || !frame.contains(ra)) continue;
                const Bin r = static_cast<Bin>(ra);
                const bool edge = mode == IndexingMode::truncated && (r < da || r < db);
                Contribution c{r, edge, {}};
                const Complex base = 0.5 * e.amplitude;
                for (int sa = 0; sa < 2; ++sa) {
                    for (int sb = 0; sb < 2; ++sb) {
                        double sign = 1.0;
                        if (la == 1 && sa == 1) sign = -sign;
                        if (lb == 1 && sb == 1) sign = -sign;
                        c.amp[2 * sa + sb] = sign * base;
                    }
                }
                contribs.push_back(c);
            }
        }
    }
    std::stable_sort(contribs.begin(), contribs.end(),
                     [](const Contribution& x, const Contribution& y) { return x.r < y.r; });

    std::vector<CoincidenceTable::BinWeights> bins;
    std::vector<CoincidenceTable::BinWeights> edge;
    for (std::size_t i = 0; i < contribs.size();) {
        std::array<Complex, 4> amp{};
        std::size_t j = i;
        for (; j < contribs.size() && contribs[j].r == contribs[i].r; ++j)
            for (int s = 0; s < 4; ++s) amp[s] += contribs[j].amp[s];
        CoincidenceTable::BinWeights bw{contribs[i].r, {}};
        for (int s = 0; s < 4; ++s) bw.w[s] = std::norm(amp[s]);
        (contribs[i].edge ? edge : bins).push_back(bw);
        i = j;
    }
    return make_table(std::move(bins), std::move(edge));
}

CoincidenceTable coincidence_table(const Mixture& mixture, const FransonSetting& alice,
                                   const FransonSetting& bob, IndexingMode mode) {
    if (mixture.empty()) return CoincidenceTable{};
    const Bin m = mixture.front().state.frame().num_bins();
    // Dense accumulation; bins are touched in component order.
    std::vector<CoincidenceTable::BinWeights> dense(m);
    std::vector<char> seen(m, 0), is_edge(m, 0);
    for (const auto& component : mixture) {
        const auto table = coincidence_table(component.state, alice, bob, mode);
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& b : pass == 0 ? table.bins() : table.edge_bins()) {
                seen[b.r] = 1;
                is_edge[b.r] = pass;
                for (int s = 0; s < 4; ++s) dense[b.r].w[s] += component.probability * b.w[s];
            }
        }
    }
    std::vector<CoincidenceTable::BinWeights> bins;
    std::vector<CoincidenceTable::BinWeights> edge;
    for (Bin r = 0; r < m; ++r) {
        if (!seen[r]) continue;
        dense[r].r = r;
        (is_edge[r] ? edge : bins).push_back(dense[r]);
    }
    return make_table(std::move(bins), std::move(edge));
}

double p_error(const CoincidenceTable& table) {
    const double total = table.total_weight();
    if (!(total > 0.0)) throw std::domain_error("no same-bin coincidences");
    return table.mismatch_weight() / total;
}

double p_error(const BiphotonState& state, const FransonSetting& alice, const FransonSetting& bob,
               IndexingMode mode) {
    return p_error(coincidence_table(state, alice, bob, mode));
}

double p_error(const Mixture& mixture, const FransonSetting& alice, const FransonSetting& bob,
               IndexingMode mode) {
    return p_error(coincidence_table(mixture, alice, bob, mode));
}

double visibility(double p) {
    if (!(p >= 0.0 && p <= 0.5)) throw std::domain_error("error probability must lie in [0, 1/2]");
    return 1.0 - 2.0 * p;
}

double joint_detection_continuous(const EnvelopeFunction& g, double t_a, double t_b,
                                  double dtau_a, double dtau_b, Detector det_a, Detector det_b) {
    const double sa = sign_of(det_a);
    const double sb = sign_of(det_b);
    const Complex amp = g(t_a, t_b) + sa * sb * g(t_a - dtau_a, t_b - dtau_b) +
                        sb * g(t_a, t_b - dtau_b) + sa * g(t_a - dtau_a, t_b);
    return std::norm(amp) / 16.0;
}

} // namespace fqkd::franson
