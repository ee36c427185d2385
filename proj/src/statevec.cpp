#include "fqkd/statevec.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fqkd {

namespace {

constexpr double kNormTolerance = 1e-12;

} // namespace

const char* to_string(IndexingMode mode) {
    return mode == IndexingMode::cyclic ? "cyclic" : "truncated";
}

IndexingMode indexing_mode_from_string(const std::string& name) {
    if (name == "cyclic") return IndexingMode::cyclic;
    if (name == "truncated") return IndexingMode::truncated;
    throw std::invalid_argument("unknown indexing mode: " + name);
}

FrameSpec::FrameSpec(Bin num_bins, double bin_width)
    : num_bins_(num_bins), bin_width_(bin_width) {
    if (num_bins < 2) throw std::invalid_argument("frame needs at least 2 bins");
    if (!(bin_width > 0.0)) throw std::invalid_argument("bin width must be positive");
}

//---------------------------------------------------------------------------//

SinglePhotonState::SinglePhotonState(FrameSpec frame, std::vector<Entry> entries)
    : frame_(frame) {
    std::sort(entries.begin(), entries.end(),
              [](const Entry& x, const Entry& y) { return x.bin < y.bin; });
    for (const auto& e : entries) {
        if (!frame_.contains(e.bin)) throw std::out_of_range("bin outside frame");
        if (!entries_.empty() && entries_.back().bin == e.bin)
            entries_.back().amplitude += e.amplitude;
        else
            entries_.push_back(e);
    }
    std::erase_if(entries_, [](const Entry& e) { return e.amplitude == Complex{}; });
    double n2 = norm2();
    if (n2 > 1.0 + kNormTolerance) throw std::invalid_argument("single-photon state norm exceeds 1");
    subnormalized_ = n2 < 1.0 - kNormTolerance;
}

Complex SinglePhotonState::amplitude(Bin bin) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), bin,
                               [](const Entry& e, Bin b) { return e.bin < b; });
    return (it != entries_.end() && it->bin == bin) ? it->amplitude : Complex{};
}

double SinglePhotonState::norm2() const {
    double s = 0.0;
    for (const auto& e : entries_) s += std::norm(e.amplitude);
    return s;
}

//---------------------------------------------------------------------------//

BiphotonState::BiphotonState(FrameSpec frame, std::vector<Entry> entries, Normalize policy)
    : frame_(frame) {
    std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
        return x.a != y.a ? x.a < y.a : x.b < y.b;
    });
    entries_.reserve(entries.size());
    for (const auto& e : entries) {
        if (!frame_.contains(e.a) || !frame_.contains(e.b))
            throw std::out_of_range("bin pair outside frame");
        if (!entries_.empty() && entries_.back().a == e.a && entries_.back().b == e.b)
            entries_.back().amplitude += e.amplitude;
        else
            entries_.push_back(e);
    }
    std::erase_if(entries_, [](const Entry& e) { return e.amplitude == Complex{}; });

    double n2 = norm2();
    switch (policy) {
    case Normalize::none:
        break;
    case Normalize::renormalize: {
        if (n2 == 0.0) throw std::invalid_argument("cannot normalize the zero state");
        double scale = 1.0 / std::sqrt(n2);
        for (auto& e : entries_) e.amplitude *= scale;
        n2 = norm2();
        break;
    }
    case Normalize::require:
        if (std::abs(n2 - 1.0) > kNormTolerance)
            throw std::invalid_argument("biphoton state is not normalized");
        break;
    }
    normalized_ = std::abs(n2 - 1.0) <= kNormTolerance;
}

Complex BiphotonState::amplitude(Bin a, Bin b) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), std::pair{a, b},
                               [](const Entry& e, const std::pair<Bin, Bin>& key) {
                                   return e.a != key.first ? e.a < key.first : e.b < key.second;
                               });
    return (it != entries_.end() && it->a == a && it->b == b) ? it->amplitude : Complex{};
}

double BiphotonState::norm2() const {
    double s = 0.0;
    for (const auto& e : entries_) s += std::norm(e.amplitude);
    return s;
}

double BiphotonState::bob_marginal(Bin b) const {
    double s = 0.0;
    for (const auto& e : entries_)
        if (e.b == b) s += std::norm(e.amplitude);
    return s;
}

//---------------------------------------------------------------------------//

BiphotonState uniform_biphoton(const FrameSpec& frame) {
    const Bin m = frame.num_bins();
    const double amp = 1.0 / std::sqrt(static_cast<double>(m));
    std::vector<BiphotonState::Entry> entries;
    entries.reserve(m);
    for (Bin k = 0; k < m; ++k) entries.push_back({k, k, Complex{amp, 0.0}});
    // Summation of M copies of 1/M can drift by a few ulp for large M.
    return BiphotonState(frame, std::move(entries), BiphotonState::Normalize::none);
}

SinglePhotonState mub_basis_state(const FrameSpec& frame, Bin n) {
    const Bin m = frame.num_bins();
    if (!frame.contains(n)) throw std::out_of_range("Fourier basis index outside frame");
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    std::vector<SinglePhotonState::Entry> entries;
    entries.reserve(m);
    for (Bin k = 0; k < m; ++k) {
        // Reduce n*k mod M first so the phase argument stays small.
        const long long nk = (static_cast<long long>(n) * k) % m;
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(nk) / m;
        entries.push_back({k, std::polar(scale, phase)});
    }
    return SinglePhotonState(frame, std::move(entries));
}

SinglePhotonState basis_state(const FrameSpec& frame, Bin k) {
    return SinglePhotonState(frame, {{k, Complex{1.0, 0.0}}});
}

Complex inner_product(const SinglePhotonState& a, const SinglePhotonState& b) {
    if (!(a.frame() == b.frame())) throw std::invalid_argument("frame mismatch");
    Complex s{};
    auto ia = a.entries().begin();
    auto ib = b.entries().begin();
    while (ia != a.entries().end() && ib != b.entries().end()) {
        if (ia->bin < ib->bin) ++ia;
        else if (ib->bin < ia->bin) ++ib;
        else {
            s += std::conj(ia->amplitude) * ib->amplitude;
            ++ia;
            ++ib;
        }
    }
    return s;
}

Complex inner_product(const BiphotonState& a, const BiphotonState& b) {
    if (!(a.frame() == b.frame())) throw std::invalid_argument("frame mismatch");
    auto less = [](const BiphotonState::Entry& x, const BiphotonState::Entry& y) {
        return x.a != y.a ? x.a < y.a : x.b < y.b;
    };
    Complex s{};
    auto ia = a.entries().begin();
    auto ib = b.entries().begin();
    while (ia != a.entries().end() && ib != b.entries().end()) {
        if (less(*ia, *ib)) ++ia;
        else if (less(*ib, *ia)) ++ib;
        else {
            s += std::conj(ia->amplitude) * ib->amplitude;
            ++ia;
            ++ib;
        }
    }
    return s;
}

double envelope_norm2(const EnvelopeFunction& g, double bin_width) {
    const double span = g.t_max - g.t_min;
    const int n = std::max(1, static_cast<int>(std::ceil(span / bin_width * g.resolution)));
    const double h = span / n;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t1 = g.t_min + (i + 0.5) * h;
        for (int j = 0; j < n; ++j) s += std::norm(g(t1, g.t_min + (j + 0.5) * h));
    }
    return s * h * h;
}

BiphotonState discretize_envelope(const EnvelopeFunction& g, const FrameSpec& frame) {
    const double width = frame.bin_width();
    if (g.t_min < 0.0 || g.t_max > frame.extent() || g.t_max <= g.t_min)
        throw std::invalid_argument("envelope support exceeds the frame");
    if (g.resolution < 1) throw std::invalid_argument("quadrature resolution must be positive");

    const int rho = g.resolution;
    const double h = width / rho;
    const Bin first = static_cast<Bin>(std::floor(g.t_min / width));
    const Bin last = std::min<Bin>(frame.num_bins() - 1,
                                   static_cast<Bin>(std::ceil(g.t_max / width)) - 1);

    std::vector<BiphotonState::Entry> entries;
    for (Bin m = first; m <= last; ++m) {
        for (Bin n = first; n <= last; ++n) {
            Complex sum{};
            for (int i = 0; i < rho; ++i) {
                const double t1 = m * width + (i + 0.5) * h;
                for (int j = 0; j < rho; ++j) sum += g(t1, n * width + (j + 0.5) * h);
            }
            // integral / T = (sum h^2) / T
            const Complex amp = sum * (h * h / width);
            if (amp != Complex{}) entries.push_back({m, n, amp});
        }
    }
    if (entries.empty()) throw std::invalid_argument("envelope vanishes on every bin");
    return BiphotonState(frame, std::move(entries), BiphotonState::Normalize::renormalize);
}

} // namespace fqkd
