#pragma once

#include "poscert/error.hpp"
#include "poscert/generator.hpp"
#include "poscert/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace poscert {

struct SemigroupOptions {
    /// Relative truncation tolerance of the Taylor series on each substep.
    double tolerance = 1e-10;
};

namespace detail {

struct ExpmvWorkspace {
    StateVector term, next, sum;
};

/// e^{tA} v by substepped Taylor series of e^{hB}, B = A + sI with s chosen so
/// diag(B) >= 0. For Metzler A every term is nonnegative when v >= 0, so the
/// cone is preserved exactly, not just up to truncation error. `out` may alias `v`.
inline void expmv(const GeneratorMatrix& a, double t, std::span<const double> v, std::span<double> out,
                  const SemigroupOptions& opt, ExpmvWorkspace& ws) {
    const std::size_t n = a.dimension();
    if (out.data() != v.data()) std::copy(v.begin(), v.end(), out.begin());
    if (t == 0.0 || n == 0) return;

    const double s = a.uniformization_shift();
    const double norm_b = a.shifted_norm1();
    if (norm_b == 0.0) {
        const double decay = std::exp(-s * t);
        for (double& x : out) x *= decay;
        return;
    }

    const auto rp = a.row_ptr();
    const auto cols = a.cols();
    const auto vals = a.values();
    const double theta = a.metzler_verified() ? 4.0 : 1.0;
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(t * norm_b / theta)));
    const double h = t / static_cast<double>(steps);
    const double decay = std::exp(-s * h);
    const double eps = std::min(opt.tolerance, 1e-10) * 1e-6;

    ws.term.resize(n);
    ws.next.resize(n);
    ws.sum.resize(n);
    auto& term = ws.term;
    auto& next = ws.next;
    auto& sum = ws.sum;
    for (std::size_t step = 0; step < steps; ++step) {
        std::copy(out.begin(), out.end(), term.begin());
        std::copy(out.begin(), out.end(), sum.begin());
        double sum_norm = vec::sum_abs(sum);
        for (int j = 1; j < 200; ++j) {
            const double c = h / j;
            for (std::size_t r = 0; r < n; ++r) {
                double acc = s * term[r];
                for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) acc += vals[k] * term[cols[k]];
                next[r] = c * acc;
            }
            term.swap(next);
            double term_norm = 0.0;
            sum_norm = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                sum[r] += term[r];
                term_norm += std::abs(term[r]);
                sum_norm += std::abs(sum[r]);
            }
            if (term_norm <= eps * sum_norm || term_norm == 0.0) break;
        }
        if (!std::isfinite(sum_norm)) throw StructuralError("semigroup action overflowed");
        for (std::size_t r = 0; r < n; ++r) out[r] = sum[r] * decay;
    }
}

}  // namespace detail

/// Action of the semigroup generated by `a`: e^{tA} v.
inline StateVector apply_semigroup(const GeneratorMatrix& a, double t, std::span<const double> v,
                                   const SemigroupOptions& opt = {}) {
    if (!(t >= 0.0)) throw DomainError("semigroup time must be nonnegative");
    if (v.size() != a.dimension()) throw StructuralError("semigroup: vector does not match generator dimension");
    require_finite(v);
    StateVector out(v.size());
    detail::ExpmvWorkspace ws;
    detail::expmv(a, t, v, out, opt, ws);
    return out;
}

/// Semigroup of A - lambda I: e^{-lambda t} e^{tA} v. Any real lambda.
inline StateVector shifted_apply(const GeneratorMatrix& a, double lambda, double t, std::span<const double> v,
                                 const SemigroupOptions& opt = {}) {
    auto w = apply_semigroup(a, t, v, opt);
    const double f = std::exp(-lambda * t);
    for (double& x : w) x *= f;
    return w;
}

/// ||e^{tA}|| <= M e^{omega t} in the space's norm.
struct GrowthBound {
    double M = 1.0;
    double omega = 0.0;
    /// True when the closed-form logarithmic norm was unavailable and the
    /// bound comes from sampling (then it only holds on the sampled set).
    bool sampled = false;
    std::string method = "zero";
};

namespace detail {

inline bool block_diagonal(const SpaceSpec& space, const GeneratorMatrix& a) {
    const auto rp = a.row_ptr();
    const auto cols = a.cols();
    for (std::size_t r = 0; r < a.dimension(); ++r) {
        const auto cr = space.component_of(r);
        for (std::size_t k = rp[r]; k < rp[r + 1]; ++k)
            if (space.component_of(cols[k]) != cr) return false;
    }
    return true;
}

/// max_j (A_jj + sum_{i != j} w_i |A_ij| / w_j) over columns j in [lo, hi).
inline double lognorm_l1(const GeneratorMatrix& a, std::span<const double> w, std::size_t lo, std::size_t hi) {
    std::vector<double> col(a.dimension(), 0.0);
    const auto rp = a.row_ptr();
    const auto cols = a.cols();
    const auto vals = a.values();
    for (std::size_t r = lo; r < hi; ++r)
        for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) {
            const std::size_t c = cols[k];
            col[c] += (c == r) ? vals[k] : w[r] * std::abs(vals[k]) / w[c];
        }
    double best = -INFINITY;
    for (std::size_t c = lo; c < hi; ++c) best = std::max(best, col[c]);
    return best;
}

inline double lognorm_linf(const GeneratorMatrix& a, std::size_t lo, std::size_t hi) {
    const auto rp = a.row_ptr();
    const auto cols = a.cols();
    const auto vals = a.values();
    double best = -INFINITY;
    for (std::size_t r = lo; r < hi; ++r) {
        double s = 0.0;
        for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) s += (cols[k] == r) ? vals[k] : std::abs(vals[k]);
        best = std::max(best, s);
    }
    return best;
}

/// Largest eigenvalue of sym(D A D^{-1}) restricted to [lo, hi), D = diag(sqrt w),
/// by power iteration on the Gershgorin-shifted matrix. The residual norm is
/// added so the estimate errs upward.
inline double lognorm_l2(const GeneratorMatrix& a, std::span<const double> w, std::size_t lo, std::size_t hi) {
    const std::size_t n = hi - lo;
    std::vector<Triplet> sym;
    const auto rp = a.row_ptr();
    const auto cols = a.cols();
    const auto vals = a.values();
    for (std::size_t r = lo; r < hi; ++r)
        for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) {
            const std::size_t c = cols[k];
            const double v = 0.5 * vals[k] * std::sqrt(w[r] / w[c]);
            sym.push_back({r - lo, c - lo, v});
            sym.push_back({c - lo, r - lo, v});
        }
    GeneratorMatrix s(n, std::move(sym));
    double shift = 0.0;
    {
        const auto srp = s.row_ptr();
        const auto sc = s.cols();
        const auto sv = s.values();
        for (std::size_t r = 0; r < n; ++r) {
            double off = 0.0, d = 0.0;
            for (std::size_t k = srp[r]; k < srp[r + 1]; ++k) {
                if (sc[k] == r)
                    d += sv[k];
                else
                    off += std::abs(sv[k]);
            }
            shift = std::max(shift, off - d);
        }
    }
    std::vector<double> x(n), y(n);
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> u(0.99, 1.01);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::sqrt(w[lo + i]) * u(rng);
    auto normalize = [](std::vector<double>& z) {
        double s2 = 0.0;
        for (double v : z) s2 += v * v;
        const double nz = std::sqrt(s2);
        for (double& v : z) v /= nz;
    };
    normalize(x);
    double rho = 0.0, resid = INFINITY;
    for (int it = 0; it < 20000; ++it) {
        s.multiply(x, y);
        rho = 0.0;
        for (std::size_t i = 0; i < n; ++i) rho += x[i] * y[i];
        resid = 0.0;
        for (std::size_t i = 0; i < n; ++i) resid += (y[i] - rho * x[i]) * (y[i] - rho * x[i]);
        resid = std::sqrt(resid);
        if (resid <= 1e-10 * (1.0 + std::abs(rho))) break;
        for (std::size_t i = 0; i < n; ++i) y[i] += shift * x[i];
        x = y;
        normalize(x);
    }
    return rho + resid;
}

}  // namespace detail

/// Growth bound via the logarithmic norm in the space's norm (M = 1). Falls
/// back to a sampled estimate when no closed form applies, flagging the result.
inline GrowthBound growth_bound(const SpaceSpec& space, const GeneratorMatrix& a, std::uint64_t seed = 1) {
    if (a.dimension() != space.dof()) throw StructuralError("growth_bound: generator does not match space");
    if (a.nonzeros() == 0) return {1.0, 0.0, false, "zero"};
    const auto w = space.weights();

    if (detail::block_diagonal(space, a)) {
        double omega = -INFINITY;
        for (std::size_t i = 0; i < space.component_count(); ++i) {
            const std::size_t lo = space.offset(i), hi = lo + space.size(i);
            NormKind kind = NormKind::L1;
            if (!space.is_scalar(i)) kind = std::get<GridComponent>(space.component(i)).norm;
            double om = 0.0;
            switch (kind) {
                case NormKind::L1: om = detail::lognorm_l1(a, w, lo, hi); break;
                case NormKind::Linf: om = detail::lognorm_linf(a, lo, hi); break;
                case NormKind::L2: om = detail::lognorm_l2(a, w, lo, hi); break;
            }
            omega = std::max(omega, om);
        }
        return {1.0, omega, false, "lognorm-blocks"};
    }

    bool all_l1 = true;
    for (std::size_t i = 0; i < space.component_count(); ++i)
        if (!space.is_scalar(i) && std::get<GridComponent>(space.component(i)).norm != NormKind::L1) all_l1 = false;
    if (all_l1) return {1.0, detail::lognorm_l1(a, w, 0, a.dimension()), false, "lognorm-l1"};

    // Sampled fallback: ratios r(t) = max_v ||e^{tA}v|| / ||v|| on t in (0, 2].
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<StateVector> probes;
    for (int k = 0; k < 24; ++k) {
        StateVector v(a.dimension());
        for (double& x : v) x = u(rng);
        probes.push_back(std::move(v));
    }
    for (std::size_t j = 0; j < std::min<std::size_t>(a.dimension(), 64); ++j) {
        StateVector v(a.dimension(), 0.0);
        v[j] = 1.0;
        probes.push_back(std::move(v));
    }
    std::vector<double> ts, rs;
    for (int k = 1; k <= 8; ++k) {
        const double t = 0.25 * k;
        double r = 0.0;
        for (const auto& v : probes) r = std::max(r, norm(space, apply_semigroup(a, t, v)) / norm(space, v));
        ts.push_back(t);
        rs.push_back(r);
    }
    double omega = -INFINITY;
    for (std::size_t k = 0; k < ts.size(); ++k) omega = std::max(omega, std::log(rs[k]) / ts[k]);
    omega = std::max(omega, 0.0);
    double m = 1.0;
    for (std::size_t k = 0; k < ts.size(); ++k) m = std::max(m, rs[k] * std::exp(-omega * ts[k]));
    return {m, omega, true, "sampled"};
}

}  // namespace poscert
