#include "fqkd/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fqkd::attacks {

namespace {

DiagonalAttack::Row normalize_row(DiagonalAttack::Row row) {
    std::sort(row.begin(), row.end(),
              [](const auto& x, const auto& y) { return x.bin < y.bin; });
    DiagonalAttack::Row out;
    out.reserve(row.size());
    for (const auto& w : row) {
        if (!out.empty() && out.back().bin == w.bin)
            out.back().lambda += w.lambda;
        else
            out.push_back(w);
    }
    std::erase_if(out, [](const auto& w) { return w.lambda == 0.0; });
    return out;
}

// Divides every lambda_{k,n} by Z_n = sum_k lambda_{k,n}.
void normalize_columns(std::vector<DiagonalAttack::Row>& rows, Bin num_bins) {
    std::vector<double> z(num_bins, 0.0);
    for (const auto& row : rows)
        for (const auto& w : row) z[w.bin] += w.lambda;
    for (auto& row : rows)
        for (auto& w : row) w.lambda /= z[w.bin];
}

} // namespace

DiagonalAttack::DiagonalAttack(FrameSpec frame, std::vector<Row> rows, IndexingMode mode)
    : frame_(frame), mode_(mode) {
    if (rows.empty()) throw std::invalid_argument("attack needs at least one outcome");
    rows_.reserve(rows.size());
    for (auto& row : rows) {
        for (const auto& w : row) {
            if (!frame_.contains(w.bin)) throw std::out_of_range("attack weight outside frame");
            if (!(w.lambda >= 0.0)) throw std::invalid_argument("attack weights must be nonnegative");
        }
        rows_.push_back(normalize_row(std::move(row)));
    }
}

double DiagonalAttack::lambda(std::size_t k, Bin n) const {
    const Row& r = rows_.at(k);
    auto it = std::lower_bound(r.begin(), r.end(), n,
                               [](const Weight& w, Bin key) { return w.bin < key; });
    return (it != r.end() && it->bin == n) ? it->lambda : 0.0;
}

std::vector<std::pair<std::size_t, double>> DiagonalAttack::column(Bin n) const {
    std::vector<std::pair<std::size_t, double>> out;
    for (std::size_t k = 0; k < rows_.size(); ++k) {
        const double l = lambda(k, n);
        if (l > 0.0) out.emplace_back(k, l);
    }
    return out;
}

//---------------------------------------------------------------------------//

MultiPeakShape::MultiPeakShape(int peaks_per_axis, std::vector<int> spacings,
                               std::vector<double> weights)
    : peaks_(peaks_per_axis), spacings_(std::move(spacings)), weights_(std::move(weights)) {
    if (peaks_ < 1) throw std::invalid_argument("need at least one peak per axis");
    if (spacings_.empty()) throw std::invalid_argument("need at least one spacing axis");
    for (int s : spacings_)
        if (s < 1) throw std::invalid_argument("peak spacings must be >= 1");
    std::size_t expected = 1;
    for (std::size_t i = 0; i < spacings_.size(); ++i) expected *= static_cast<std::size_t>(peaks_);
    if (weights_.size() != expected) throw std::invalid_argument("weight grid has the wrong size");
    double sum = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0)) throw std::invalid_argument("peak weights must be nonnegative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("peak weights must sum to 1");
}

std::vector<int> MultiPeakShape::coordinates(std::size_t i) const {
    std::vector<int> n(spacings_.size());
    for (auto& c : n) {
        c = static_cast<int>(i % peaks_);
        i /= peaks_;
    }
    return n;
}

MultiPeakShape flat_shape(int peaks_per_axis, std::vector<int> spacings) {
    std::size_t count = 1;
    for (std::size_t i = 0; i < spacings.size(); ++i) count *= static_cast<std::size_t>(peaks_per_axis);
    return MultiPeakShape(peaks_per_axis, std::move(spacings),
                          std::vector<double>(count, 1.0 / static_cast<double>(count)));
}

const char* to_string(ExponentMode mode) {
    switch (mode) {
    case ExponentMode::squared: return "squared";
    case ExponentMode::absolute: return "absolute";
    case ExponentMode::signed_: return "signed";
    }
    return "?";
}

ExponentMode exponent_mode_from_string(const std::string& name) {
    if (name == "squared") return ExponentMode::squared;
    if (name == "absolute") return ExponentMode::absolute;
    if (name == "signed") return ExponentMode::signed_;
    throw std::invalid_argument("unknown exponent mode: " + name);
}

MultiPeakShape gaussian_grid_weights(int peaks_per_axis, std::vector<int> spacings, double alpha,
                                     ExponentMode mode) {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    if (peaks_per_axis < 1) throw std::invalid_argument("need at least one peak per axis");
    const double center = (peaks_per_axis - 1) / 2.0;
    std::vector<double> profile(peaks_per_axis);
    for (int n = 0; n < peaks_per_axis; ++n) {
        const double x = n - center;
        switch (mode) {
        case ExponentMode::squared: profile[n] = std::exp(-alpha * x * x); break;
        case ExponentMode::absolute: profile[n] = std::exp(-alpha * std::abs(x)); break;
        case ExponentMode::signed_: profile[n] = std::exp(-alpha * x); break;
        }
    }
    const double axis_sum = std::accumulate(profile.begin(), profile.end(), 0.0);
    for (auto& p : profile) p /= axis_sum;

    std::vector<double> weights{1.0};
    for (std::size_t axis = 0; axis < spacings.size(); ++axis) {
        std::vector<double> next;
        next.reserve(weights.size() * profile.size());
        // First axis fastest: the new axis multiplies whole blocks.
        for (double p : profile)
            for (double w : weights) next.push_back(w * p);
        weights = std::move(next);
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (auto& w : weights) w /= total;
    return MultiPeakShape(peaks_per_axis, std::move(spacings), std::move(weights));
}

//---------------------------------------------------------------------------//

DiagonalAttack sharp_attack(const FrameSpec& frame, IndexingMode mode) {
    std::vector<DiagonalAttack::Row> rows(frame.num_bins());
    for (Bin k = 0; k < frame.num_bins(); ++k) rows[k] = {{k, 1.0}};
    return DiagonalAttack(frame, std::move(rows), mode);
}

DiagonalAttack square_window_attack(const FrameSpec& frame, int window, IndexingMode mode) {
    const Bin m = frame.num_bins();
    if (window < 1 || m % window != 0)
        throw std::invalid_argument("window length must divide the number of bins");
    std::vector<DiagonalAttack::Row> rows(m / window);
    for (Bin k = 0; k < m / window; ++k)
        for (Bin r = k * window; r < (k + 1) * window; ++r) rows[k].push_back({r, 1.0});
    return DiagonalAttack(frame, std::move(rows), mode);
}

DiagonalAttack gaussian_window_attack(const FrameSpec& frame, double width, IndexingMode mode) {
    if (!(width > 0.0)) throw std::invalid_argument("Gaussian window width must be positive");
    const Bin m = frame.num_bins();
    std::vector<DiagonalAttack::Row> rows(m);
    for (Bin k = 0; k < m; ++k) {
        for (Bin n = 0; n < m; ++n) {
            int dist = std::abs(k - n);
            if (mode == IndexingMode::cyclic) dist = std::min(dist, m - dist);
            const double v = std::exp(-static_cast<double>(dist) * dist / width);
            if (v > 0.0) rows[k].push_back({n, v});
        }
    }
    normalize_columns(rows, m);
    return DiagonalAttack(frame, std::move(rows), mode);
}

DiagonalAttack multipeak_attack(const FrameSpec& frame, const MultiPeakShape& shape,
                                IndexingMode mode) {
    if (shape.dimensions() != 1) throw std::invalid_argument("multipeak attack needs a one-axis shape");
    const Bin m = frame.num_bins();
    const int peaks = shape.peaks_per_axis();
    const int spacing = shape.spacings().front();
    if (static_cast<long long>(peaks) * spacing >= m)
        throw std::invalid_argument("peaks exceed the frame (need L * spacing < M)");

    std::vector<DiagonalAttack::Row> rows(m);
    for (Bin k = 0; k < m; ++k) {
        for (int n = 0; n < peaks; ++n) {
            const double g = shape.weights()[n];
            if (g == 0.0) continue;
            long long bin = static_cast<long long>(k) - static_cast<long long>(n) * spacing;
            if (mode == IndexingMode::cyclic) bin = wrap_bin(bin, m);
            if (frame.contains(bin)) rows[k].push_back({static_cast<Bin>(bin), g});
        }
    }
    if (mode == IndexingMode::truncated) normalize_columns(rows, m);
    return DiagonalAttack(frame, std::move(rows), mode);
}

DiagonalAttack product_multipeak_attack(const FrameSpec& frame, const MultiPeakShape& shape,
                                        IndexingMode mode) {
    const Bin m = frame.num_bins();
    std::vector<std::pair<long long, double>> offsets;
    offsets.reserve(shape.num_peaks());
    for (std::size_t i = 0; i < shape.num_peaks(); ++i) {
        const auto n = shape.coordinates(i);
        long long off = 0;
        for (std::size_t axis = 0; axis < n.size(); ++axis)
            off += static_cast<long long>(n[axis]) * shape.spacings()[axis];
        offsets.emplace_back(off, shape.weights()[i]);
    }
    if (mode == IndexingMode::truncated) {
        auto sorted = offsets;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 1; i < sorted.size(); ++i)
            if (sorted[i].first == sorted[i - 1].first)
                throw std::invalid_argument("multi-peak grid offsets collide");
        if (sorted.back().first >= m) throw std::invalid_argument("multi-peak grid exceeds the frame");
    }

    std::vector<DiagonalAttack::Row> rows(m);
    for (Bin k = 0; k < m; ++k) {
        rows[k].reserve(offsets.size());
        for (const auto& [off, g] : offsets) {
            if (g == 0.0) continue;
            long long bin = k + off;
            if (mode == IndexingMode::cyclic) bin = wrap_bin(bin, m);
            if (frame.contains(bin)) rows[k].push_back({static_cast<Bin>(bin), g});
        }
    }
    if (mode == IndexingMode::truncated) normalize_columns(rows, m);
    return DiagonalAttack(frame, std::move(rows), mode);
}

double validate_completeness(const DiagonalAttack& attack) {
    std::vector<double> z(attack.frame().num_bins(), 0.0);
    for (const auto& row : attack.rows())
        for (const auto& w : row) z[w.bin] += w.lambda;
    double worst = 0.0;
    for (double s : z) worst = std::max(worst, std::abs(s - 1.0));
    return worst;
}

//---------------------------------------------------------------------------//

namespace {

void check_frames(const BiphotonState& state, const DiagonalAttack& attack) {
    if (!(state.frame() == attack.frame()))
        throw std::invalid_argument("attack and state frames differ");
}

// Entries of `state` grouped by Bob's bin.
std::vector<std::vector<const BiphotonState::Entry*>> index_by_bob(const BiphotonState& state) {
    std::vector<std::vector<const BiphotonState::Entry*>> by_bob(state.frame().num_bins());
    for (const auto& e : state.entries()) by_bob[e.b].push_back(&e);
    return by_bob;
}

std::vector<BiphotonState::Entry> kraus_image(
    const DiagonalAttack::Row& row,
    const std::vector<std::vector<const BiphotonState::Entry*>>& by_bob) {
    std::vector<BiphotonState::Entry> out;
    for (const auto& w : row) {
        const double s = std::sqrt(w.lambda);
        for (const auto* e : by_bob[w.bin]) out.push_back({e->a, e->b, e->amplitude * s});
    }
    return out;
}

double norm2(const std::vector<BiphotonState::Entry>& entries) {
    double s = 0.0;
    for (const auto& e : entries) s += std::norm(e.amplitude);
    return s;
}

} // namespace

std::vector<double> outcome_probabilities(const BiphotonState& state, const DiagonalAttack& attack) {
    check_frames(state, attack);
    std::vector<double> bob(state.frame().num_bins(), 0.0);
    for (const auto& e : state.entries()) bob[e.b] += std::norm(e.amplitude);
    std::vector<double> probs(attack.num_outcomes(), 0.0);
    for (std::size_t k = 0; k < attack.num_outcomes(); ++k)
        for (const auto& w : attack.row(k)) probs[k] += w.lambda * bob[w.bin];
    return probs;
}

AttackOutcome apply_attack(const BiphotonState& state, const DiagonalAttack& attack,
                           std::size_t outcome) {
    check_frames(state, attack);
    if (outcome >= attack.num_outcomes()) throw std::out_of_range("attack outcome out of range");
    auto image = kraus_image(attack.row(outcome), index_by_bob(state));
    const double p = norm2(image);
    if (!(p > 0.0)) throw std::domain_error("requested attack outcome has zero probability");
    return {outcome, p,
            BiphotonState(state.frame(), std::move(image), BiphotonState::Normalize::renormalize)};
}

Mixture outcome_mixture(const BiphotonState& state, const DiagonalAttack& attack) {
    check_frames(state, attack);
    const auto by_bob = index_by_bob(state);
    Mixture out;
    out.reserve(attack.num_outcomes());
    for (std::size_t k = 0; k < attack.num_outcomes(); ++k) {
        auto image = kraus_image(attack.row(k), by_bob);
        const double p = norm2(image);
        if (!(p > 0.0)) continue;
        out.push_back({p, BiphotonState(state.frame(), std::move(image),
                                        BiphotonState::Normalize::renormalize)});
    }
    return out;
}

//---------------------------------------------------------------------------//

ContinuousAttack continuous_multipeak(double delta, double spacing, int peaks) {
    if (peaks < 1) throw std::invalid_argument("need at least one window");
    if (!(delta > 0.0)) throw std::invalid_argument("window width must be positive");
    if (peaks > 1 && !(delta < spacing))
        throw std::invalid_argument("windows overlap (need delta < spacing)");
    const double height = 1.0 / (peaks * delta);
    ContinuousAttack attack;
    attack.beta = [=](double t_e, double t_prime) {
        for (int m = 0; m < peaks; ++m) {
            const double start = t_e - m * spacing;
            if (t_prime >= start && t_prime < start + delta) return height;
        }
        return 0.0;
    };
    attack.kinks = [=](double t_prime) {
        std::vector<double> k;
        k.reserve(2 * peaks);
        for (int m = 0; m < peaks; ++m) {
            k.push_back(t_prime + m * spacing - delta);
            k.push_back(t_prime + m * spacing);
        }
        std::sort(k.begin(), k.end());
        return k;
    };
    return attack;
}

DiscreteContinuousAttack bin_localizing_attack(const FrameSpec& frame) {
    DiscreteContinuousAttack attack;
    const double width = frame.bin_width();
    for (Bin mu = 0; mu < frame.num_bins(); ++mu) {
        attack.beta.push_back([=](double t) {
            return (t >= mu * width && t < (mu + 1) * width) ? 1.0 : 0.0;
        });
    }
    return attack;
}

double validate_completeness(const ContinuousAttack& attack, const std::vector<double>& probe_times,
                             int samples) {
    double worst = 0.0;
    for (double tp : probe_times) {
        const auto kinks = attack.kinks(tp);
        double integral = 0.0;
        for (std::size_t i = 0; i + 1 < kinks.size(); ++i) {
            const double a = kinks[i];
            const double b = kinks[i + 1];
            if (!(b > a)) continue;
            const double h = (b - a) / samples;
            double s = 0.0;
            for (int j = 0; j < samples; ++j) s += attack.beta(a + (j + 0.5) * h, tp);
            integral += s * h;
        }
        worst = std::max(worst, std::abs(integral - 1.0));
    }
    return worst;
}

double validate_completeness(const DiscreteContinuousAttack& attack,
                             const std::vector<double>& probe_times) {
    double worst = 0.0;
    for (double tp : probe_times) {
        double s = 0.0;
        for (const auto& b : attack.beta) s += b(tp);
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
}

EnvelopeFunction apply_continuous_attack(const EnvelopeFunction& g, const ContinuousAttack& attack,
                                         double t_e) {
    EnvelopeFunction out = g;
    out.eval = [g, beta = attack.beta, t_e](double t1, double t2) {
        const double b = beta(t_e, t2);
        return b > 0.0 ? std::sqrt(b) * g(t1, t2) : Complex{};
    };
    return out;
}

} // namespace fqkd::attacks
