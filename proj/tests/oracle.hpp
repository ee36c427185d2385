// Dense reference implementations for cross-checking the sparse library.
// Nothing here calls into the library's numerics: states are full M*M
// vectors, projections are built from explicit basis vectors and attacks
// are applied as diagonal Kraus matrices.
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace oracle {

using C = std::complex<double>;

struct Dense {
    int m;
    std::vector<C> amp; // index a*m + b
    C& at(int a, int b) { return amp[static_cast<std::size_t>(a * m + b)]; }
    C at(int a, int b) const { return amp[static_cast<std::size_t>(a * m + b)]; }
};

inline Dense uniform(int m) {
    Dense d{m, std::vector<C>(static_cast<std::size_t>(m * m))};
    for (int n = 0; n < m; ++n) d.at(n, n) = 1.0 / std::sqrt(double(m));
    return d;
}

/// Single-photon projection vector (e_r + s e_{r-dt}) / sqrt2; `wrap`
/// selects periodic partner indexing, otherwise an out-of-range partner is
/// dropped. Returns whether the partner was dropped.
inline bool projection(int m, int r, int dt, int s, bool wrap, std::vector<C>& v) {
    v.assign(static_cast<std::size_t>(m), C{});
    const double h = 1.0 / std::sqrt(2.0);
    v[static_cast<std::size_t>(r)] += h;
    int p = r - dt;
    if (wrap) p = ((p % m) + m) % m;
    if (p < 0) return true;
    v[static_cast<std::size_t>(p)] += s * h;
    return false;
}

struct BinRow {
    std::array<double, 4> w; // index 2*alice + bob, + = 0, - = 1
    bool edge;
};

/// |<pA (x) pB | psi>|^2 for every r and sign pair.
inline std::vector<BinRow> coincidences(const Dense& psi, int dta, int dtb, bool wrap) {
    const int m = psi.m;
    std::vector<BinRow> rows(static_cast<std::size_t>(m));
    std::vector<C> va, vb;
    for (int r = 0; r < m; ++r) {
        for (int sa = 0; sa < 2; ++sa) {
            for (int sb = 0; sb < 2; ++sb) {
                const bool ea = projection(m, r, dta, sa ? -1 : 1, wrap, va);
                const bool eb = projection(m, r, dtb, sb ? -1 : 1, wrap, vb);
                C s{};
                for (int a = 0; a < m; ++a)
                    for (int b = 0; b < m; ++b) s += std::conj(va[a]) * std::conj(vb[b]) * psi.at(a, b);
                rows[static_cast<std::size_t>(r)].w[static_cast<std::size_t>(2 * sa + sb)] = std::norm(s);
                rows[static_cast<std::size_t>(r)].edge = ea || eb;
            }
        }
    }
    return rows;
}

/// Dense lambda matrix, lam[k][n].
using Povm = std::vector<std::vector<double>>;

/// (I (x) sqrt(diag lam_k)) psi, unnormalized.
inline Dense kraus(const Dense& psi, const std::vector<double>& lam) {
    Dense out = psi;
    for (int a = 0; a < psi.m; ++a)
        for (int b = 0; b < psi.m; ++b) out.at(a, b) *= std::sqrt(lam[static_cast<std::size_t>(b)]);
    return out;
}

inline double norm2(const Dense& d) {
    double s = 0.0;
    for (const auto& x : d.amp) s += std::norm(x);
    return s;
}

/// Random complete diagonal POVM with k outcomes, some weights zeroed.
template <class Rng>
Povm random_povm(int m, int k, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Povm lam(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(m)));
    for (int n = 0; n < m; ++n) {
        double z = 0.0;
        for (int j = 0; j < k; ++j) {
            const double x = u(rng) < 0.3 ? 0.0 : u(rng);
            lam[j][n] = x;
            z += x;
        }
        if (z == 0.0) {
            lam[0][n] = 1.0;
            z = 1.0;
        }
        for (int j = 0; j < k; ++j) lam[j][n] /= z;
    }
    return lam;
}

/// Random normalized biphoton with the given number of nonzero entries.
template <class Rng>
Dense random_state(int m, int support, Rng& rng) {
    std::normal_distribution<double> g;
    std::uniform_int_distribution<int> bin(0, m - 1);
    Dense d{m, std::vector<C>(static_cast<std::size_t>(m * m))};
    for (int i = 0; i < support; ++i) d.at(bin(rng), bin(rng)) += C(g(rng), g(rng));
    const double n = std::sqrt(norm2(d));
    for (auto& x : d.amp) x /= n;
    return d;
}

/// Mutual information of a uniform bin and the POVM outcome, by brute force.
inline double information(const Povm& lam) {
    const std::size_t m = lam.front().size();
    double info = 0.0;
    for (const auto& row : lam) {
        double pk = 0.0;
        for (double x : row) pk += x / double(m);
        for (double x : row)
            if (x > 0.0) info += (x / double(m)) * std::log2(x / pk);
    }
    return info;
}

} // namespace oracle
