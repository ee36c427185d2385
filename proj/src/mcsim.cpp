#include "fqkd/mcsim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "fqkd/format.hpp"

namespace fqkd::mcsim {

using nlohmann::json;

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t index, std::uint32_t role) {
    std::uint64_t k = mix64(seed + kGolden);
    k = mix64(k ^ (index + kGolden));
    k = mix64(k ^ ((static_cast<std::uint64_t>(role) + 1) * kGolden));
    state_ = k;
}

CounterRng::result_type CounterRng::operator()() {
    state_ += kGolden;
    return mix64(state_);
}

double CounterRng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

std::uint64_t CounterRng::below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
}

//---------------------------------------------------------------------------//

void ProtocolConfig::validate() const {
    auto prob = [](double p, const char* what) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
    };
    prob(p_timing, "p_timing");
    prob(intercept_fraction, "intercept_fraction");
    if (n_frames < 1) throw std::invalid_argument("n_frames must be >= 1");
    bank.validate(frame);
    if (attack.kind != attacks::AttackSpec::Kind::none && !(attack.frame == frame))
        throw std::invalid_argument("attack frame differs from protocol frame");
}

IndexingMode ProtocolConfig::effective_boundary() const {
    if (boundary) return *boundary;
    return attack.kind == attacks::AttackSpec::Kind::none ? IndexingMode::cyclic : attack.indexing_mode;
}

ProtocolConfig config_from_json(const json& doc) {
    if (!doc.is_object()) throw std::invalid_argument("protocol config must be a JSON object");
    ProtocolConfig c;
    if (doc.contains("frame")) {
        const auto& f = doc.at("frame");
        c.frame = f.is_number_integer() ? FrameSpec(f.get<Bin>())
                                        : FrameSpec(f.at("num_bins").get<Bin>(), f.value("bin_width", 1.0));
    }
    c.p_timing = doc.value("p_timing", c.p_timing);
    if (doc.contains("settings")) c.bank = franson::SettingsBank(doc.at("settings").get<std::vector<int>>());
    if (doc.contains("attack") && !doc.at("attack").is_null()) c.attack = attacks::attack_spec_from_json(doc.at("attack"), c.frame);
    else c.attack.frame = c.frame;
    c.intercept_fraction = doc.value("intercept_fraction", c.intercept_fraction);
    if (doc.contains("n_frames")) {
        const auto& n = doc.at("n_frames");
        if (!n.is_number_integer() || n.get<long long>() < 1)
            throw std::invalid_argument("n_frames must be a positive integer");
        c.n_frames = n.get<std::uint64_t>();
    }
    c.seed = doc.value("seed", c.seed);
    if (doc.contains("boundary")) c.boundary = indexing_mode_from_string(doc.at("boundary").get<std::string>());
    c.validate();
    return c;
}

json to_json(const ProtocolConfig& c) {
    json doc = {{"frame", {{"num_bins", c.frame.num_bins()}, {"bin_width", c.frame.bin_width()}}},
                {"p_timing", c.p_timing},
                {"settings", c.bank.delays()},
                {"attack", c.attack.kind == attacks::AttackSpec::Kind::none ? json(nullptr) : attacks::to_json(c.attack)},
                {"intercept_fraction", c.intercept_fraction},
                {"n_frames", c.n_frames},
                {"seed", c.seed}};
    if (c.boundary) doc["boundary"] = to_string(*c.boundary);
    return doc;
}

//---------------------------------------------------------------------------//

std::uint64_t SiftedStats::discarded() const {
    return discarded_basis + discarded_setting + discarded_cross_bin + discarded_edge;
}

std::uint64_t SiftedStats::security_checks() const {
    std::uint64_t n = 0;
    for (const auto& s : per_setting) n += s.total();
    return n;
}

std::uint64_t SiftedStats::security_mismatches() const {
    std::uint64_t n = 0;
    for (const auto& s : per_setting) n += s.mismatches();
    return n;
}

std::uint64_t SiftedStats::matched_basis() const {
    return timing_coincidences + security_checks() + discarded_cross_bin + discarded_edge;
}

double SiftedStats::p_error() const {
    const auto n = security_checks();
    if (n == 0) throw std::domain_error("no security-check coincidences");
    return static_cast<double>(security_mismatches()) / static_cast<double>(n);
}

double SiftedStats::p_error_stderr() const {
    const double p = p_error();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(security_checks()));
}

double SiftedStats::timing_error_rate() const {
    if (timing_coincidences == 0) throw std::domain_error("no timing coincidences");
    return static_cast<double>(timing_mismatches) / static_cast<double>(timing_coincidences);
}

double SiftedStats::matched_fraction() const {
    if (frames == 0) throw std::domain_error("no frames");
    return static_cast<double>(matched_basis()) / static_cast<double>(frames);
}

void SiftedStats::merge(const SiftedStats& o) {
    const bool adopt = per_setting.empty();
    if (!adopt && !o.per_setting.empty()) {
        bool same = o.per_setting.size() == per_setting.size();
        for (std::size_t i = 0; same && i < per_setting.size(); ++i)
            same = per_setting[i].delta_tau == o.per_setting[i].delta_tau;
        if (!same) throw std::invalid_argument("merging statistics of different setting banks");
    }
    frames += o.frames;
    intercepted += o.intercepted;
    timing_coincidences += o.timing_coincidences;
    timing_mismatches += o.timing_mismatches;
    discarded_basis += o.discarded_basis;
    discarded_setting += o.discarded_setting;
    discarded_cross_bin += o.discarded_cross_bin;
    discarded_edge += o.discarded_edge;
    if (adopt) {
        per_setting = o.per_setting;
        return;
    }
    for (std::size_t i = 0; i < o.per_setting.size(); ++i)
        for (int s = 0; s < 4; ++s) per_setting[i].counts[s] += o.per_setting[i].counts[s];
}

json to_json(const SiftedStats& s) {
    auto number_or_null = [](auto&& f) -> json {
        try {
            return format_number(f());
        } catch (const std::domain_error&) {
            return nullptr;
        }
    };
    json settings = json::array();
    for (const auto& ps : s.per_setting)
        settings.push_back({{"delta_tau", ps.delta_tau},
                            {"d2_d2", ps.counts[0]},
                            {"d2_d3", ps.counts[1]},
                            {"d3_d2", ps.counts[2]},
                            {"d3_d3", ps.counts[3]}});
    return {{"schema", kStatsSchema},
            {"frames", s.frames},
            {"intercepted", s.intercepted},
            {"timing_coincidences", s.timing_coincidences},
            {"timing_mismatches", s.timing_mismatches},
            {"timing_error_rate", number_or_null([&] { return s.timing_error_rate(); })},
            {"per_setting", settings},
            {"security_checks", s.security_checks()},
            {"security_mismatches", s.security_mismatches()},
            {"p_error", number_or_null([&] { return s.p_error(); })},
            {"p_error_stderr", number_or_null([&] { return s.p_error_stderr(); })},
            {"matched_fraction", number_or_null([&] { return s.matched_fraction(); })},
            {"discarded",
             {{"basis", s.discarded_basis},
              {"setting", s.discarded_setting},
              {"cross_bin", s.discarded_cross_bin},
              {"edge", s.discarded_edge},
              {"total", s.discarded()}}}};
}

//---------------------------------------------------------------------------//

namespace {

// Outcome categories of a matched-setting interferometer event.
enum Category { kD2D2, kD2D3, kD3D2, kD3D3, kEdge, kCrossBin, kNumCategories };

using CategoryCdf = std::array<double, kNumCategories - 1>;

template <class Cdf>
std::size_t pick(const Cdf& cdf, std::size_t begin, std::size_t end, double u) {
    const double x = u * cdf[end - 1];
    auto it = std::upper_bound(cdf.begin() + static_cast<std::ptrdiff_t>(begin),
                               cdf.begin() + static_cast<std::ptrdiff_t>(end), x);
    const auto i = static_cast<std::size_t>(it - cdf.begin());
    return std::min(i, end - 1);
}

CategoryCdf category_cdf(const franson::CoincidenceTable& table) {
    // Physical click probability is a quarter of the projection weight;
    // the remainder lands in different bins.
    std::array<double, 4> same{};
    for (const auto& b : table.bins())
        for (int s = 0; s < 4; ++s) same[s] += b.w[s];
    CategoryCdf cdf{};
    double acc = 0.0;
    for (int s = 0; s < 4; ++s) {
        acc += same[s] / 4.0;
        cdf[s] = acc;
    }
    acc += table.edge_weight() / 4.0;
    cdf[kEdge] = acc;
    return cdf;
}

} // namespace

struct Simulator::Tables {
    Bin num_bins = 0;
    bool has_attack = false;
    // Column n of the attack: outcomes col_k[i] with cumulative weight
    // col_cdf[i] for i in [col_start[n], col_start[n+1]).
    std::vector<std::size_t> col_start;
    std::vector<std::size_t> col_k;
    std::vector<double> col_cdf;
    // State 0 is the untouched source, state 1 + k the post-state of
    // outcome k. Timing-basis bins of each state, by cumulative weight.
    std::vector<std::size_t> timing_start;
    std::vector<std::pair<Bin, Bin>> timing_bins;
    std::vector<double> timing_cdf;
    // categories[state * d + setting]
    std::vector<CategoryCdf> categories;
};

Simulator::Simulator(ProtocolConfig config) : config_(std::move(config)) {
    config_.validate();
    auto t = std::make_unique<Tables>();
    const FrameSpec& frame = config_.frame;
    const auto boundary = config_.effective_boundary();
    const auto& delays = config_.bank.delays();
    t->num_bins = frame.num_bins();

    std::vector<BiphotonState> states{uniform_biphoton(frame)};
    const auto attack = attacks::build_attack(config_.attack);
    if (attack) {
        t->has_attack = true;
        std::vector<std::vector<std::pair<std::size_t, double>>> columns(frame.num_bins());
        for (std::size_t k = 0; k < attack->num_outcomes(); ++k)
            for (const auto& w : attack->row(k)) columns[w.bin].emplace_back(k, w.lambda);
        t->col_start.push_back(0);
        for (const auto& col : columns) {
            double acc = 0.0;
            for (const auto& [k, l] : col) {
                acc += l;
                t->col_k.push_back(k);
                t->col_cdf.push_back(acc);
            }
            if (col.empty()) throw std::invalid_argument("attack has no outcome for some bin");
            t->col_start.push_back(t->col_k.size());
        }
        const auto source = uniform_biphoton(frame);
        for (std::size_t k = 0; k < attack->num_outcomes(); ++k) {
            if (attack->row(k).empty()) {
                states.push_back(source); // never drawn
                continue;
            }
            states.push_back(attacks::apply_attack(source, *attack, k).post_state);
        }
    }

    for (const auto& st : states) {
        t->timing_start.push_back(t->timing_bins.size());
        double acc = 0.0;
        for (const auto& e : st.entries()) {
            acc += std::norm(e.amplitude);
            t->timing_bins.emplace_back(e.a, e.b);
            t->timing_cdf.push_back(acc);
        }
        for (int dtau : delays) {
            const franson::FransonSetting a{dtau, franson::Party::alice};
            const franson::FransonSetting b{dtau, franson::Party::bob};
            t->categories.push_back(category_cdf(franson::coincidence_table(st, a, b, boundary)));
        }
    }
    t->timing_start.push_back(t->timing_bins.size());
    tables_ = std::move(t);
}

Simulator::~Simulator() = default;
Simulator::Simulator(Simulator&&) noexcept = default;
Simulator& Simulator::operator=(Simulator&&) noexcept = default;

namespace {

SiftedStats empty_stats(const franson::SettingsBank& bank) {
    SiftedStats s;
    for (int d : bank.delays()) s.per_setting.push_back({d, {}});
    return s;
}

} // namespace

SiftedStats Simulator::run(std::uint64_t seed, std::uint64_t n_frames, unsigned threads) const {
    if (n_frames < 1) throw std::invalid_argument("n_frames must be >= 1");
    const Tables& t = *tables_;
    const double p_t = config_.p_timing;
    const double f = config_.intercept_fraction;
    const std::uint64_t d = config_.bank.size();
    const auto role = [](Role r) { return static_cast<std::uint32_t>(r); };

    auto simulate = [&](std::uint64_t begin, std::uint64_t end) {
        SiftedStats s = empty_stats(config_.bank);
        for (std::uint64_t i = begin; i < end; ++i) {
            ++s.frames;
            CounterRng src(seed, i, role(Role::source));
            const Bin n = static_cast<Bin>(src.below(static_cast<std::uint64_t>(t.num_bins)));

            std::size_t state = 0;
            if (t.has_attack) {
                CounterRng eve(seed, i, role(Role::eve));
                const bool intercept = eve.uniform() < f;
                const double u = eve.uniform();
                if (intercept) {
                    const auto j = pick(t.col_cdf, t.col_start[n], t.col_start[n + 1], u);
                    state = 1 + t.col_k[j];
                    ++s.intercepted;
                }
            }

            CounterRng alice(seed, i, role(Role::alice));
            CounterRng bob(seed, i, role(Role::bob));
            const bool a_timing = alice.uniform() < p_t;
            const bool b_timing = bob.uniform() < p_t;
            const auto a_setting = alice.below(d);
            const auto b_setting = bob.below(d);

            if (a_timing && b_timing) {
                ++s.timing_coincidences;
                if (state != 0) {
                    CounterRng clock(seed, i, role(Role::timing));
                    const auto j = pick(t.timing_cdf, t.timing_start[state], t.timing_start[state + 1],
                                        clock.uniform());
                    if (t.timing_bins[j].first != t.timing_bins[j].second) ++s.timing_mismatches;
                }
                continue;
            }
            if (a_timing != b_timing) {
                ++s.discarded_basis;
                continue;
            }
            if (a_setting != b_setting) {
                ++s.discarded_setting;
                continue;
            }
            CounterRng det(seed, i, role(Role::detection));
            const double u = det.uniform();
            const auto& cdf = t.categories[state * d + a_setting];
            int c = 0;
            while (c < kNumCategories - 1 && !(u < cdf[c])) ++c;
            if (c < 4) ++s.per_setting[a_setting].counts[c];
            else if (c == kEdge) ++s.discarded_edge;
            else ++s.discarded_cross_bin;
        }
        return s;
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    const std::uint64_t workers = std::min<std::uint64_t>(threads, n_frames);
    if (workers <= 1) return simulate(0, n_frames);

    std::vector<SiftedStats> parts(workers);
    {
        std::vector<std::jthread> pool;
        for (std::uint64_t w = 0; w < workers; ++w) {
            const std::uint64_t begin = n_frames * w / workers;
            const std::uint64_t end = n_frames * (w + 1) / workers;
            pool.emplace_back([&, w, begin, end] { parts[w] = simulate(begin, end); });
        }
    }
    SiftedStats total = empty_stats(config_.bank);
    for (const auto& p : parts) total.merge(p);
    return total;
}

SiftedStats run_protocol(const ProtocolConfig& config, unsigned threads) {
    return Simulator(config).run(threads);
}

metrics::DisturbanceReport expected_disturbance(const ProtocolConfig& config) {
    config.validate();
    const auto source = uniform_biphoton(config.frame);
    Mixture mixture;
    const auto attack = attacks::build_attack(config.attack);
    const double f = attack ? config.intercept_fraction : 0.0;
    if (f < 1.0) mixture.push_back({1.0 - f, source});
    if (f > 0.0)
        for (auto& c : attacks::outcome_mixture(source, *attack))
            mixture.push_back({f * c.probability, std::move(c.state)});
    return metrics::disturbance(mixture, config.bank, metrics::Convention::coincidence_weighted,
                                config.effective_boundary());
}

double expected_matched_fraction(const ProtocolConfig& config) {
    const double q = 1.0 - config.p_timing;
    return config.p_timing * config.p_timing + q * q / static_cast<double>(config.bank.size());
}

ZScores compare_to_exact(const SiftedStats& stats, const ProtocolConfig& config,
                         const metrics::DisturbanceReport& exact) {
    if (stats.per_setting.size() != config.bank.size())
        throw std::invalid_argument("statistics and configuration disagree on the settings bank");
    const double sp = stats.p_error_stderr();
    if (!(sp > 0.0)) throw std::domain_error("zero-variance comparison for p_error");
    const double f = stats.matched_fraction();
    const double sf = std::sqrt(f * (1.0 - f) / static_cast<double>(stats.frames));
    if (!(sf > 0.0)) throw std::domain_error("zero-variance comparison for the matched fraction");
    return {(stats.p_error() - exact.p_error) / sp, (f - expected_matched_fraction(config)) / sf};
}

} // namespace fqkd::mcsim
