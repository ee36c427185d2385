#include "doctest.h"

#include <cmath>
#include <numbers>

#include "fqkd/statevec.hpp"

using namespace fqkd;

TEST_CASE("frame spec rejects degenerate frames") {
    CHECK_THROWS_AS(FrameSpec(1), std::invalid_argument);
    CHECK_THROWS_AS(FrameSpec(4, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(FrameSpec(4, -1.0), std::invalid_argument);
    const FrameSpec f(8, 0.5);
    CHECK(f.extent() == doctest::Approx(4.0));
    CHECK(f.contains(7));
    CHECK_FALSE(f.contains(8));
    CHECK_FALSE(f.contains(-1));
}

TEST_CASE("indexing mode names round trip") {
    for (auto m : {IndexingMode::cyclic, IndexingMode::truncated})
        CHECK(indexing_mode_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(indexing_mode_from_string("periodic"), std::invalid_argument);
    CHECK(wrap_bin(-1, 8) == 7);
    CHECK(wrap_bin(17, 8) == 1);
}

TEST_CASE("uniform biphoton") {
    SUBCASE("M=4 amplitudes") {
        const auto psi = uniform_biphoton(FrameSpec(4));
        CHECK(psi.support_size() == 4);
        for (Bin k = 0; k < 4; ++k) CHECK(psi.amplitude(k, k) == Complex(0.5, 0.0));
        CHECK(psi.amplitude(0, 1) == Complex{});
    }
    SUBCASE("M=1024 normalized") {
        CHECK(std::abs(uniform_biphoton(FrameSpec(1024)).norm2() - 1.0) < 1e-12);
    }
    SUBCASE("bob marginal is flat") {
        const auto psi = uniform_biphoton(FrameSpec(16));
        for (Bin b = 0; b < 16; ++b) CHECK(psi.bob_marginal(b) == doctest::Approx(1.0 / 16));
    }
    SUBCASE("invariant under joint cyclic relabeling") {
        const FrameSpec f(12);
        const auto psi = uniform_biphoton(f);
        for (int s = 1; s < 12; ++s) {
            std::vector<BiphotonState::Entry> shifted;
            for (const auto& e : psi.entries())
                shifted.push_back({wrap_bin(e.a + s, 12), wrap_bin(e.b + s, 12), e.amplitude});
            const BiphotonState moved(f, shifted);
            CHECK(std::abs(inner_product(psi, moved) - 1.0) < 1e-14);
        }
    }
}

TEST_CASE("biphoton construction policies") {
    const FrameSpec f(4);
    CHECK_THROWS_AS(BiphotonState(f, {{0, 0, 1.0}, {1, 1, 1.0}}), std::invalid_argument);
    const BiphotonState r(f, {{0, 0, 1.0}, {1, 1, 1.0}}, BiphotonState::Normalize::renormalize);
    CHECK(r.norm2() == doctest::Approx(1.0));
    CHECK(r.normalized());
    const BiphotonState dup(f, {{2, 3, 0.5}, {2, 3, 0.5}}, BiphotonState::Normalize::none);
    CHECK(dup.support_size() == 1);
    CHECK(dup.amplitude(2, 3) == Complex(1.0, 0.0));
    CHECK_THROWS_AS(BiphotonState(f, {{4, 0, 1.0}}), std::out_of_range);
}

TEST_CASE("single photon states") {
    const FrameSpec f(8);
    const SinglePhotonState half(f, {{1, std::sqrt(0.5)}});
    CHECK(half.subnormalized());
    CHECK_THROWS(SinglePhotonState(f, {{1, 1.0}, {2, 0.5}}));
    CHECK_THROWS(SinglePhotonState(f, {{9, 1.0}}));
    CHECK_FALSE(basis_state(f, 3).subnormalized());
}

TEST_CASE("fourier basis") {
    const FrameSpec f8(8);
    SUBCASE("n=0 is flat") {
        const auto phi = mub_basis_state(f8, 0);
        for (const auto& e : phi.entries())
            CHECK(std::abs(e.amplitude - Complex(1.0 / std::sqrt(8.0), 0.0)) < 1e-15);
    }
    SUBCASE("n=3 is unbiased") {
        const auto phi = mub_basis_state(f8, 3);
        for (Bin k = 0; k < 8; ++k) CHECK(std::norm(phi.amplitude(k)) == doctest::Approx(1.0 / 8).epsilon(1e-14));
    }
    SUBCASE("n=2 and n=5 orthogonal") {
        CHECK(std::abs(inner_product(mub_basis_state(f8, 2), mub_basis_state(f8, 5))) < 1e-12);
    }
    SUBCASE("out of range") { CHECK_THROWS_AS(mub_basis_state(f8, 8), std::out_of_range); }
    SUBCASE("M=4 values") {
        const FrameSpec f4(4);
        CHECK(std::abs(inner_product(mub_basis_state(f4, 0), mub_basis_state(f4, 0)) - 1.0) < 1e-15);
        CHECK(std::abs(inner_product(basis_state(f4, 2), mub_basis_state(f4, 1)) - Complex(-0.5, 0.0)) < 1e-15);
    }
}

TEST_CASE("fourier basis is orthonormal and unbiased up to M=256") {
    for (Bin m : {2, 3, 5, 16, 17, 64, 256}) {
        const FrameSpec f(m);
        std::vector<SinglePhotonState> basis;
        for (Bin n = 0; n < m; ++n) basis.push_back(mub_basis_state(f, n));
        double gram = 0.0, bias = 0.0;
        for (Bin i = 0; i < m; ++i) {
            for (const auto& e : basis[i].entries()) bias = std::max(bias, std::abs(std::norm(e.amplitude) - 1.0 / m));
            const Bin step = m > 64 ? 7 : 1;
            for (Bin j = 0; j < m; j += step)
                gram = std::max(gram, std::abs(inner_product(basis[i], basis[j]) - Complex(i == j ? 1.0 : 0.0)));
        }
        CHECK(gram < 1e-10);
        CHECK(bias < 1e-10);
    }
}

TEST_CASE("inner products") {
    const FrameSpec f(4);
    const auto a = basis_state(f, 1);
    const SinglePhotonState b(f, {{1, Complex(0.0, 1.0)}});
    CHECK(inner_product(a, b) == Complex(0.0, 1.0));
    CHECK(inner_product(b, a) == Complex(0.0, -1.0));
    CHECK_THROWS_AS(inner_product(a, basis_state(FrameSpec(8), 1)), std::invalid_argument);
    CHECK(std::abs(inner_product(uniform_biphoton(FrameSpec(16)), uniform_biphoton(FrameSpec(16))) - 1.0) < 1e-14);
}

TEST_CASE("discretize envelope") {
    SUBCASE("diagonal indicators reproduce the uniform state") {
        const FrameSpec f(4);
        EnvelopeFunction g{[](double t1, double t2) {
                               return std::floor(t1) == std::floor(t2) ? Complex(0.5, 0.0) : Complex{};
                           },
                           0.0, 4.0};
        const auto psi = discretize_envelope(g, f);
        CHECK(std::abs(inner_product(psi, uniform_biphoton(f)) - 1.0) < 1e-9);
    }
    SUBCASE("narrow Gaussian concentrates in its bin") {
        const FrameSpec f(8);
        const double s = 1.0 / 20.0;
        EnvelopeFunction g{[s](double t1, double t2) {
                               const double d1 = t1 - 2.5, d2 = t2 - 2.5;
                               return Complex(std::exp(-(d1 * d1 + d2 * d2) / (4 * s * s)), 0.0);
                           },
                           0.0, 8.0, 64};
        const auto psi = discretize_envelope(g, f);
        CHECK(std::norm(psi.amplitude(2, 2)) >= 0.999);
        CHECK(std::abs(psi.norm2() - 1.0) < 1e-9);
    }
    SUBCASE("support beyond the frame is rejected") {
        const FrameSpec f(4);
        EnvelopeFunction g{[](double, double) { return Complex(1.0, 0.0); }, 0.0, 5.0};
        CHECK_THROWS_AS(discretize_envelope(g, f), std::invalid_argument);
    }
    SUBCASE("normalized for assorted smooth envelopes") {
        const FrameSpec f(6, 2.0);
        for (double c : {1.3, 4.0, 9.1}) {
            EnvelopeFunction g{[c](double t1, double t2) {
                                   return std::polar(std::exp(-(t1 - c) * (t1 - c) - 0.3 * (t2 - t1) * (t2 - t1)),
                                                     0.2 * t1);
                               },
                               0.0, 12.0, 8};
            CHECK(std::abs(discretize_envelope(g, f).norm2() - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("envelope norm by midpoint quadrature") {
    const double s = 0.7;
    EnvelopeFunction g{[s](double t1, double t2) {
                           const double d1 = t1 - 5.0, d2 = t2 - 5.0;
                           return Complex(std::exp(-(d1 * d1 + d2 * d2) / (4 * s * s)) / (std::sqrt(2 * std::numbers::pi) * s),
                                          0.0);
                       },
                       0.0, 10.0, 32};
    CHECK(envelope_norm2(g, 1.0) == doctest::Approx(1.0).epsilon(1e-6));
}
