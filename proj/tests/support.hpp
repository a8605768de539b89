#pragma once

// Seeded generators shared by the unit tests.

#include "poscert/generator.hpp"
#include "poscert/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline std::size_t index(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Random Metzler matrix: nonnegative off-diagonals with the given density,
/// diagonal in [diag_lo, diag_hi].
inline poscert::GeneratorMatrix random_metzler(Rng& rng, std::size_t n, double density = 0.3, double diag_lo = -3.0,
                                               double diag_hi = 1.0) {
    std::vector<poscert::Triplet> t;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j)
                t.push_back({i, j, uniform(rng, diag_lo, diag_hi)});
            else if (uniform(rng, 0, 1) < density)
                t.push_back({i, j, uniform(rng, 0.0, 1.0)});
        }
    return poscert::GeneratorMatrix(n, std::move(t));
}

/// Metzler plus one strictly negative off-diagonal entry.
inline poscert::GeneratorMatrix random_non_metzler(Rng& rng, std::size_t n) {
    auto t = random_metzler(rng, n, 0.2).triplets();
    const std::size_t i = index(rng, 0, n - 1);
    std::size_t j = index(rng, 0, n - 2);
    if (j >= i) ++j;
    t.push_back({i, j, -uniform(rng, 1.0, 3.0)});
    return poscert::GeneratorMatrix(n, std::move(t));
}

inline std::vector<double> random_nonneg(Rng& rng, std::size_t n, double hi = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = uniform(rng, 0.0, hi);
    return v;
}

inline std::vector<double> random_signed(Rng& rng, std::size_t n, double mag = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = uniform(rng, -mag, mag);
    return v;
}

/// max |a - b| / max(max |b|, tiny)
inline double rel_diff(std::span<const double> a, std::span<const double> b) {
    double d = 0.0, s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d = std::max(d, std::abs(a[i] - b[i]));
        s = std::max(s, std::abs(b[i]));
    }
    return d / std::max(s, 1e-300);
}

inline poscert::SpaceSpec scalars(std::size_t n) {
    std::vector<poscert::Component> c;
    for (std::size_t i = 0; i < n; ++i) c.push_back(poscert::SpaceSpec::scalar("y" + std::to_string(i)));
    return poscert::SpaceSpec(std::move(c));
}

}  // namespace testing
