#include "doctest.h"

#include <cmath>
#include <random>

#include "fqkd/attack_spec.hpp"
#include "fqkd/attacks.hpp"
#include "fqkd/franson.hpp"
#include "fqkd/metrics.hpp"
#include "oracle_bridge.hpp"

using namespace fqkd;
using namespace fqkd::attacks;

namespace {

using oracle::from_povm;
using oracle::to_dense;

bool all_diagonal(const BiphotonState& s) {
    for (const auto& e : s.entries())
        if (e.a != e.b) return false;
    return true;
}

} // namespace

TEST_CASE("diagonal attack storage") {
    const FrameSpec f(4);
    const DiagonalAttack a(f, {{{2, 0.5}, {0, 0.25}, {2, 0.25}, {1, 0.0}}, {{0, 0.75}, {1, 1.0}, {3, 1.0}}});
    CHECK(a.row(0).size() == 2);
    CHECK(a.row(0)[0].bin == 0);
    CHECK(a.lambda(0, 2) == 0.75);
    CHECK(a.lambda(0, 1) == 0.0);
    CHECK(a.column(0).size() == 2);
    CHECK(validate_completeness(a) == doctest::Approx(0.25));
    CHECK_THROWS_AS(DiagonalAttack(f, {{{4, 1.0}}}), std::out_of_range);
    CHECK_THROWS_AS(DiagonalAttack(f, {{{1, -0.1}}}), std::invalid_argument);
    CHECK_THROWS_AS(DiagonalAttack(f, {}), std::invalid_argument);
}

TEST_CASE("completeness deviation of a scaled row") {
    const FrameSpec f(6);
    auto rows = sharp_attack(f).rows();
    for (auto& w : rows[2]) w.lambda *= 1.1;
    CHECK(validate_completeness(DiagonalAttack(f, rows)) == doctest::Approx(0.1));
}

TEST_CASE("sharp attack") {
    const FrameSpec f(4);
    const auto a = sharp_attack(f);
    CHECK(a.num_outcomes() == 4);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(a.row(k).size() == 1);
        CHECK(a.lambda(k, static_cast<Bin>(k)) == 1.0);
    }
    CHECK(validate_completeness(a) == 0.0);
    const auto psi = uniform_biphoton(f);
    for (std::size_t k = 0; k < 4; ++k) {
        const auto out = apply_attack(psi, a, k);
        CHECK(out.probability == doctest::Approx(0.25).epsilon(1e-15));
        CHECK(out.post_state.support_size() == 1);
        CHECK(std::abs(out.post_state.amplitude(Bin(k), Bin(k)) - 1.0) < 1e-15);
    }
}

TEST_CASE("square window attack") {
    SUBCASE("outcome count") {
        const auto a = square_window_attack(FrameSpec(1024), 32);
        CHECK(a.num_outcomes() == 32);
        CHECK(validate_completeness(a) == 0.0);
    }
    SUBCASE("window equal to the frame is the identity") {
        const FrameSpec f(8);
        const auto a = square_window_attack(f, 8);
        CHECK(a.num_outcomes() == 1);
        const auto out = apply_attack(uniform_biphoton(f), a, 0);
        CHECK(std::abs(inner_product(out.post_state, uniform_biphoton(f)) - 1.0) < 1e-14);
        CHECK(metrics::disturbance(a, franson::SettingsBank({3})).p_error == 0.0);
    }
    SUBCASE("divisibility") { CHECK_THROWS_AS(square_window_attack(FrameSpec(12), 5), std::invalid_argument); }
    SUBCASE("post state flat over the window") {
        const FrameSpec f(32);
        const auto out = apply_attack(uniform_biphoton(f), square_window_attack(f, 8), 2);
        CHECK(out.post_state.support_size() == 8);
        for (Bin n = 16; n < 24; ++n) CHECK(std::abs(out.post_state.amplitude(n, n) - std::sqrt(1.0 / 8)) < 1e-15);
    }
}

TEST_CASE("gaussian window attack") {
    SUBCASE("narrow limit approaches the sharp measurement") {
        const FrameSpec f(32);
        const auto g = gaussian_window_attack(f, 1e-4);
        const auto s = sharp_attack(f);
        double tv = 0.0;
        for (std::size_t k = 0; k < 32; ++k)
            for (Bin n = 0; n < 32; ++n) tv += std::abs(g.lambda(k, n) - s.lambda(k, n));
        CHECK(tv / 2 < 1e-9);
    }
    SUBCASE("cyclic completeness") {
        CHECK(validate_completeness(gaussian_window_attack(FrameSpec(64), 10.0)) < 1e-10);
        CHECK(validate_completeness(gaussian_window_attack(FrameSpec(64), 10.0, IndexingMode::truncated)) < 1e-10);
    }
    SUBCASE("matched information width by bisection") {
        const FrameSpec f(64);
        const double target = std::log2(64.0 / 6.0);
        const double a = metrics::match_gaussian_window_width(f, target);
        CHECK(metrics::eve_information(gaussian_window_attack(f, a)) == doctest::Approx(target).epsilon(1e-9));
    }
    SUBCASE("width must be positive") { CHECK_THROWS_AS(gaussian_window_attack(FrameSpec(8), 0.0), std::invalid_argument); }
}

TEST_CASE("multi-peak shapes") {
    CHECK_THROWS_AS(MultiPeakShape(2, {1}, {0.5, 0.6}), std::invalid_argument);
    CHECK_THROWS_AS(MultiPeakShape(2, {1}, {0.5}), std::invalid_argument);
    CHECK_THROWS_AS(MultiPeakShape(2, {0}, {0.5, 0.5}), std::invalid_argument);
    const auto s = flat_shape(3, {1, 5});
    CHECK(s.num_peaks() == 9);
    CHECK(s.coordinates(5) == std::vector<int>{2, 1});
    for (double w : s.weights()) CHECK(w == doctest::Approx(1.0 / 9));

    SUBCASE("alpha to zero is flat") {
        const auto g = gaussian_grid_weights(16, {1, 17}, 1e-13);
        for (double w : g.weights()) CHECK(std::abs(w - 1.0 / 256) < 1e-9);
    }
    SUBCASE("exponent readings") {
        const auto sq = gaussian_grid_weights(4, {1}, 1.0, ExponentMode::squared);
        const auto ab = gaussian_grid_weights(4, {1}, 1.0, ExponentMode::absolute);
        const auto sg = gaussian_grid_weights(4, {1}, 1.0, ExponentMode::signed_);
        CHECK(sq.weights()[0] / sq.weights()[1] == doctest::Approx(std::exp(-(2.25 - 0.25))));
        CHECK(ab.weights()[0] / ab.weights()[1] == doctest::Approx(std::exp(-1.0)));
        CHECK(sg.weights()[0] / sg.weights()[1] == doctest::Approx(std::exp(1.0)));
        CHECK(sq.weights()[0] == doctest::Approx(sq.weights()[3]));
        for (auto m : {ExponentMode::squared, ExponentMode::absolute, ExponentMode::signed_})
            CHECK(exponent_mode_from_string(to_string(m)) == m);
        CHECK_THROWS(exponent_mode_from_string("cubic"));
        CHECK_THROWS_AS(gaussian_grid_weights(4, {1}, 0.0), std::invalid_argument);
    }
}

TEST_CASE("multipeak attack") {
    SUBCASE("one peak is the sharp measurement") {
        const FrameSpec f(16);
        const auto a = multipeak_attack(f, flat_shape(1, {3}));
        const auto s = sharp_attack(f);
        for (std::size_t k = 0; k < 16; ++k)
            for (Bin n = 0; n < 16; ++n) CHECK(a.lambda(k, n) == s.lambda(k, n));
    }
    SUBCASE("two-peak post state") {
        const FrameSpec f(16);
        const auto out = apply_attack(uniform_biphoton(f), multipeak_attack(f, flat_shape(2, {2})), 5);
        CHECK(out.post_state.support_size() == 2);
        CHECK(std::abs(out.post_state.amplitude(5, 5) - std::sqrt(0.5)) < 1e-15);
        CHECK(std::abs(out.post_state.amplitude(3, 3) - std::sqrt(0.5)) < 1e-15);
    }
    SUBCASE("adjacent peaks against the oracle") {
        const FrameSpec f(8);
        const auto a = multipeak_attack(f, flat_shape(2, {1}));
        const auto psi = uniform_biphoton(f);
        const auto out = apply_attack(psi, a, 3);
        CHECK(std::abs(out.post_state.amplitude(3, 3) - std::sqrt(0.5)) < 1e-15);
        CHECK(std::abs(out.post_state.amplitude(2, 2) - std::sqrt(0.5)) < 1e-15);
        std::vector<double> lam(8);
        for (Bin n = 0; n < 8; ++n) lam[n] = a.lambda(3, n);
        CHECK(std::abs(out.probability - oracle::norm2(oracle::kraus(to_dense(psi), lam))) < 1e-15);
    }
    SUBCASE("frame limits") {
        CHECK_THROWS_AS(multipeak_attack(FrameSpec(16), flat_shape(4, {4})), std::invalid_argument);
        CHECK_THROWS_AS(multipeak_attack(FrameSpec(16), flat_shape(2, {1, 2})), std::invalid_argument);
        const auto t = multipeak_attack(FrameSpec(16), flat_shape(3, {2}), IndexingMode::truncated);
        CHECK(validate_completeness(t) < 1e-12);
    }
}

TEST_CASE("product multipeak attack") {
    SUBCASE("flat w=16 d=2 information") {
        const auto a = product_multipeak_attack(FrameSpec(1024), flat_shape(16, {1, 17}));
        CHECK(metrics::eve_information(a) == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(validate_completeness(a) < 1e-12);
    }
    SUBCASE("one axis matches the multipeak attack up to relabeling") {
        const FrameSpec f(64);
        for (auto shape : {flat_shape(5, {3}), gaussian_grid_weights(5, {3}, 0.4)}) {
            const auto p = product_multipeak_attack(f, shape);
            const auto m = multipeak_attack(f, shape);
            const int shift = (5 - 1) * 3;
            for (std::size_t k = 0; k < 64; ++k)
                for (Bin n = 0; n < 64; ++n)
                    CHECK(p.lambda(k, n) == doctest::Approx(m.lambda((k + shift) % 64, n)).epsilon(1e-14));
        }
    }
    SUBCASE("collisions") {
        CHECK_THROWS_AS(product_multipeak_attack(FrameSpec(64), flat_shape(4, {1, 2}), IndexingMode::truncated),
                        std::invalid_argument);
        CHECK_NOTHROW(product_multipeak_attack(FrameSpec(64), flat_shape(4, {1, 2})));
        CHECK(validate_completeness(product_multipeak_attack(FrameSpec(64), flat_shape(4, {1, 2}))) < 1e-12);
    }
}

TEST_CASE("apply attack errors and sampling") {
    const FrameSpec f(8);
    const BiphotonState psi(f, {{2, 2, 1.0}});
    const auto a = sharp_attack(f);
    CHECK_THROWS_AS(apply_attack(psi, a, 3), std::domain_error);
    CHECK_THROWS_AS(apply_attack(psi, a, 8), std::out_of_range);
    CHECK_THROWS_AS(apply_attack(uniform_biphoton(FrameSpec(4)), a, 0), std::invalid_argument);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 10; ++i) CHECK(apply_attack(psi, a, rng).outcome == 2);
    const auto probs = outcome_probabilities(uniform_biphoton(f), a);
    for (double p : probs) CHECK(p == doctest::Approx(1.0 / 8));
}

TEST_CASE("diagonal attacks keep timing correlation") {
    const FrameSpec f(32);
    const auto psi = uniform_biphoton(f);
    for (const auto& a : {sharp_attack(f), square_window_attack(f, 4), gaussian_window_attack(f, 3.0),
                          multipeak_attack(f, gaussian_grid_weights(4, {3}, 0.2)),
                          product_multipeak_attack(f, flat_shape(2, {1, 5}))}) {
        double total = 0.0;
        for (const auto& c : outcome_mixture(psi, a)) {
            CHECK(all_diagonal(c.state));
            total += c.probability;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("mixture identity against the dense Kraus channel") {
    std::mt19937_64 rng(99);
    for (int m = 2; m <= 16; ++m) {
        const FrameSpec f(m);
        const int k = 1 + static_cast<int>(rng() % 5);
        const auto lam = oracle::random_povm(m, k, rng);
        const auto a = from_povm(f, lam);
        const auto psi = oracle::random_state(m, 2 * m, rng);
        std::vector<BiphotonState::Entry> e;
        for (int x = 0; x < m; ++x)
            for (int y = 0; y < m; ++y)
                if (psi.at(x, y) != Complex{}) e.push_back({x, y, psi.at(x, y)});
        const BiphotonState state(f, e, BiphotonState::Normalize::renormalize);
        const auto dense_in = to_dense(state);

        const std::size_t dim = static_cast<std::size_t>(m * m);
        std::vector<Complex> want(dim * dim), got(dim * dim);
        for (const auto& l : lam) {
            const auto v = oracle::kraus(dense_in, l);
            for (std::size_t i = 0; i < dim; ++i)
                for (std::size_t j = 0; j < dim; ++j) want[i * dim + j] += v.amp[i] * std::conj(v.amp[j]);
        }
        for (const auto& c : outcome_mixture(state, a)) {
            const auto v = to_dense(c.state);
            for (std::size_t i = 0; i < dim; ++i)
                for (std::size_t j = 0; j < dim; ++j) got[i * dim + j] += c.probability * v.amp[i] * std::conj(v.amp[j]);
        }
        double dev = 0.0;
        for (std::size_t i = 0; i < dim * dim; ++i) dev = std::max(dev, std::abs(want[i] - got[i]));
        CHECK(dev < 1e-12);
    }
}

TEST_CASE("sharp attack fully dephases the uniform state") {
    const FrameSpec f(8);
    const auto mix = outcome_mixture(uniform_biphoton(f), sharp_attack(f));
    CHECK(mix.size() == 8);
    for (const auto& c : mix) {
        CHECK(c.state.support_size() == 1);
        CHECK(c.probability == doctest::Approx(1.0 / 8));
    }
}

TEST_CASE("attack spec round trip") {
    AttackSpec spec;
    spec.kind = AttackSpec::Kind::multipeak;
    spec.frame = FrameSpec(256, 0.5);
    spec.peaks = 8;
    spec.spacings = {3};
    spec.alpha = 0.05;
    spec.exponent = ExponentMode::absolute;
    const auto back = attack_spec_from_json(to_json(spec));
    CHECK(to_json(back) == to_json(spec));
    const auto a = build_attack(back);
    REQUIRE(a.has_value());
    CHECK(a->num_outcomes() == 256);
    CHECK_FALSE(build_attack(attack_spec_from_json(nlohmann::json{{"kind", "none"}})).has_value());
    CHECK_THROWS_AS(attack_spec_from_json(nlohmann::json{{"kind", "teleport"}}), std::invalid_argument);
    CHECK_THROWS_AS(attack_spec_from_json(nlohmann::json{{"kind", "square_window"}}), std::invalid_argument);
}

TEST_CASE("flat multipeak disturbance closed forms") {
    const FrameSpec f(1024);
    for (int l : {2, 4, 8, 16}) {
        for (int d : {1, 2, 5}) {
            const auto a = multipeak_attack(f, flat_shape(l, {d}));
            CHECK(std::abs(metrics::disturbance(a, franson::SettingsBank({d})).p_error - 1.0 / (2 * l)) < 1e-12);
            if (d > 1) CHECK(std::abs(metrics::disturbance(a, franson::SettingsBank({d + 1})).p_error - 0.5) < 1e-12);
        }
    }
}

//---------------------------------------------------------------------------//

namespace {

EnvelopeFunction broad_pair() {
    return {[](double t1, double t2) {
                const double a = (t1 + t2) / 2 - 30.0;
                const double d = t1 - t2;
                return Complex(std::exp(-a * a / 400.0 - d * d / 4.0), 0.0);
            },
            0.0, 60.0};
}

} // namespace

TEST_CASE("continuous multipeak completeness") {
    const auto a = continuous_multipeak(0.5, 3.0, 4);
    CHECK(validate_completeness(a, {0.0, 1.3, 7.77, 20.0}) < 1e-6);
    CHECK(validate_completeness(continuous_multipeak(2.0, 5.0, 1), {3.0}) < 1e-6);
    CHECK_THROWS_AS(continuous_multipeak(3.0, 3.0, 2), std::invalid_argument);
    CHECK_THROWS_AS(continuous_multipeak(0.0, 3.0, 2), std::invalid_argument);
    CHECK(validate_completeness(bin_localizing_attack(FrameSpec(16, 0.5)), {0.1, 3.3, 7.99}) == 0.0);
}

TEST_CASE("continuous multipeak with one window is a single square window") {
    const auto a = continuous_multipeak(2.0, 5.0, 1);
    CHECK(a.beta(10.0, 10.5) == doctest::Approx(0.5));
    CHECK(a.beta(10.0, 12.5) == 0.0);
    CHECK(a.beta(10.0, 9.5) == 0.0);
}

TEST_CASE("continuous multipeak leaves matched-delay detection unchanged") {
    using franson::Detector;
    const auto g = broad_pair();
    const double dtau = 3.0, delta = 1.0, te = 36.0;
    const int peaks = 4;
    const auto post = apply_continuous_attack(g, continuous_multipeak(delta, dtau, peaks), te);
    const double scale = 1.0 / (peaks * delta);
    for (double tb : {33.4, 30.2, 36.9}) {
        for (auto da : {Detector::d2, Detector::d3}) {
            for (auto db : {Detector::d2, Detector::d3}) {
                const double before = franson::joint_detection_continuous(g, tb, tb, dtau, dtau, da, db);
                const double after = franson::joint_detection_continuous(post, tb, tb, dtau, dtau, da, db);
                CHECK(after == doctest::Approx(scale * before).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("continuous multipeak with a wrong spacing destroys the correlation") {
    using franson::Detector;
    const auto g = broad_pair();
    const double dtau = 3.0;
    const auto post = apply_continuous_attack(g, continuous_multipeak(1.0, 5.0, 4), 36.0);
    const double t = 31.5;
    const double before_mis = franson::joint_detection_continuous(g, t, t, dtau, dtau, Detector::d2, Detector::d3);
    const double before_match = franson::joint_detection_continuous(g, t, t, dtau, dtau, Detector::d2, Detector::d2);
    const double mis = franson::joint_detection_continuous(post, t, t, dtau, dtau, Detector::d2, Detector::d3);
    const double match = franson::joint_detection_continuous(post, t, t, dtau, dtau, Detector::d2, Detector::d2);
    CHECK(before_mis < 1e-2 * before_match);
    CHECK(mis > 0.3 * match);
}
