#pragma once

#include "poscert/error.hpp"
#include "poscert/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace poscert {

/// f(y, t) written into `out` (same length as y).
using FieldEval = std::function<void(std::span<const double> y, double t, std::span<double> out)>;

/// The nonlinear part f of y' = Ay + f(y,t), plus optional closed-form
/// quasi-positivity shift and Lipschitz constant on the ball of radius m.
struct NonlinearField {
    FieldEval evaluate;
    std::function<double(double m)> analytic_shift;
    std::function<double(double m)> analytic_lipschitz;
    /// Upper bound on sup_t ||f(0, t)||.
    std::optional<double> zero_bound;

    StateVector operator()(std::span<const double> y, double t) const {
        StateVector out(y.size(), 0.0);
        evaluate(y, t, out);
        return out;
    }
};

struct CertifyConfig {
    std::size_t sample_count = 4096;
    std::uint64_t seed = 20240917;
    std::vector<double> t_grid{0.0};
    /// Pairs used by the Lipschitz estimate when all pairs would be too many.
    std::size_t max_pairs = 8192;
    /// Relative cone tolerance (tau = tolerance * (1 + ||z||)).
    double tolerance = 1e-12;
};

/// Nonnegative states of norm <= m. Deterministic corner cases come first:
/// the zero state, every basis direction scaled to norm m, and one state per
/// component filled with a constant; then `count` seeded random states with
/// sparse zero patterns and radii spread over [0, m].
inline std::vector<StateVector> sample_cone_ball(const SpaceSpec& space, double m, std::size_t count,
                                                 std::uint64_t seed) {
    if (!(m > 0.0)) throw DomainError("sample_cone_ball: radius must be positive");
    const std::size_t n = space.dof();
    std::vector<StateVector> out;
    out.emplace_back(n, 0.0);
    if (count <= 1) return out;

    auto scale_to = [&](StateVector& v, double radius) {
        const double nv = norm(space, v);
        if (nv > 0.0)
            for (double& x : v) x *= radius / nv;
    };

    for (std::size_t k = 0; k < n; ++k) {
        StateVector e(n, 0.0);
        e[k] = 1.0;
        scale_to(e, m);
        out.push_back(std::move(e));
    }
    for (std::size_t i = 0; i < space.component_count(); ++i) {
        StateVector c(n, 0.0);
        std::fill_n(c.begin() + static_cast<std::ptrdiff_t>(space.offset(i)), space.size(i), 1.0);
        scale_to(c, m);
        out.push_back(std::move(c));
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t s = 1; s < count; ++s) {
        StateVector v(n, 0.0);
        // Alternate between dense draws, sparse masks and per-component constants.
        const std::size_t mode = s % 4;
        const double keep = mode == 1 ? 0.5 : (mode == 2 ? 0.1 : 1.0);
        if (mode == 3) {
            for (std::size_t i = 0; i < space.component_count(); ++i) {
                const double level = unit(rng) < 0.25 ? 0.0 : unit(rng);
                std::fill_n(v.begin() + static_cast<std::ptrdiff_t>(space.offset(i)), space.size(i), level);
            }
        } else {
            for (double& x : v) x = unit(rng) < keep ? unit(rng) : 0.0;
        }
        if (norm(space, v) == 0.0) v[static_cast<std::size_t>(unit(rng) * n) % n] = 1.0;
        const double radius = (s % 8 == 0) ? m : m * unit(rng);
        scale_to(v, radius);
        out.push_back(std::move(v));
    }
    return out;
}

struct ShiftEstimate {
    double lambda_hat = 0.0;
    double sampled = 0.0;
    std::optional<double> analytic;
    /// Most negative f_i(z,t) found at a cone-boundary coordinate z_i = 0.
    std::optional<Violation> uncertifiable;
    /// Sample attaining the sampled shift (the tightest constraint).
    std::optional<Violation> tightest;
};

/// lambda_hat = max(0, max_{z,t,i: z_i > 0} -f_i(z,t)/z_i), joined with the
/// analytic shift when one is supplied. Coordinates with z_i = 0 and
/// f_i < -tau cannot be fixed by any shift and are reported separately.
inline ShiftEstimate estimate_shift(const NonlinearField& f, const SpaceSpec& space, double m,
                                    std::span<const StateVector> samples, std::span<const double> t_grid,
                                    double tolerance = 1e-12) {
    ShiftEstimate est;
    StateVector fz(space.dof());
    for (const auto& z : samples) {
        require_match(space, z);
        const double tau = tolerance * (1.0 + norm(space, z));
        for (double t : t_grid) {
            f.evaluate(z, t, fz);
            for (std::size_t i = 0; i < z.size(); ++i) {
                if (z[i] > 0.0) {
                    const double ratio = -fz[i] / z[i];
                    if (ratio > est.sampled) {
                        est.sampled = ratio;
                        est.tightest = Violation{z, i, fz[i], t};
                    }
                } else if (fz[i] < -tau) {
                    if (!est.uncertifiable || fz[i] < est.uncertifiable->value)
                        est.uncertifiable = Violation{z, i, fz[i], t};
                }
            }
        }
    }
    est.lambda_hat = est.sampled;
    if (f.analytic_shift) {
        est.analytic = f.analytic_shift(m);
        est.lambda_hat = std::max(est.lambda_hat, *est.analytic);
    }
    if (est.tightest) {
        auto& v = *est.tightest;
        v.value = v.value + est.lambda_hat * v.state[v.component];
    }
    return est;
}

/// Throwing form: returns lambda_hat or raises CertificationFailure.
inline double certify_shift(const NonlinearField& f, const SpaceSpec& space, double m,
                            std::span<const StateVector> samples, std::span<const double> t_grid,
                            double tolerance = 1e-12) {
    auto est = estimate_shift(f, space, m, samples, t_grid, tolerance);
    if (est.uncertifiable)
        throw CertificationFailure("negative f at a cone-boundary coordinate " +
                                       std::to_string(est.uncertifiable->component) + ": no finite shift certifies it",
                                   *est.uncertifiable);
    return est.lambda_hat;
}

struct LipschitzEstimate {
    double k_hat = 0.0;
    double sampled = 0.0;
    std::optional<double> analytic;
    std::size_t pairs = 0;
};

/// Max difference quotient ||f(z1,t) - f(z2,t)|| / ||z1 - z2|| over sample
/// pairs (all of them when few enough, else seeded random pairs) plus short
/// perturbation pairs that probe the local derivative.
inline LipschitzEstimate estimate_lipschitz(const NonlinearField& f, const SpaceSpec& space, double m,
                                            std::span<const StateVector> samples, std::span<const double> t_grid,
                                            std::size_t max_pairs = 8192, std::uint64_t seed = 7) {
    LipschitzEstimate est;
    const std::size_t ns = samples.size();
    const std::size_t n = space.dof();
    std::vector<std::pair<StateVector, StateVector>> extra;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    if (ns >= 2) {
        const std::size_t all = ns * (ns - 1) / 2;
        if (all <= max_pairs) {
            for (std::size_t a = 0; a < ns; ++a)
                for (std::size_t b = a + 1; b < ns; ++b) pairs.emplace_back(a, b);
        } else {
            std::mt19937_64 rng(seed);
            std::uniform_int_distribution<std::size_t> pick(0, ns - 1);
            while (pairs.size() < max_pairs) {
                const std::size_t a = pick(rng), b = pick(rng);
                if (a != b) pairs.emplace_back(a, b);
            }
        }
        // Short pairs z, (1 - d) z + d ||z|| u (u a random unit direction in the
        // cone): same norm bound as z, so no dependence on m. Probes take every
        // sample when there are at most 256, so nested sample sets give nested pairs.
        std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const std::size_t probes = std::min<std::size_t>(ns, 256);
        constexpr double d = 1e-5;
        for (std::size_t p = 0; p < probes; ++p) {
            const StateVector& z = samples[ns <= 256 ? p : p * ns / 256];
            StateVector dir(n);
            for (double& x : dir) x = unit(rng);
            const double nd = norm(space, dir), nz = norm(space, z);
            if (nz == 0.0 || nd == 0.0) continue;
            StateVector z2(n);
            for (std::size_t k = 0; k < n; ++k) z2[k] = (1.0 - d) * z[k] + d * nz * dir[k] / nd;
            extra.emplace_back(z, std::move(z2));
        }
    }

    StateVector f1(n), f2(n), diff(n);
    auto quotient = [&](const StateVector& a, const StateVector& b) {
        for (std::size_t k = 0; k < n; ++k) diff[k] = a[k] - b[k];
        const double dz = norm(space, diff);
        if (dz == 0.0) return;
        for (double t : t_grid) {
            f.evaluate(a, t, f1);
            f.evaluate(b, t, f2);
            for (std::size_t k = 0; k < n; ++k) diff[k] = f1[k] - f2[k];
            est.sampled = std::max(est.sampled, norm(space, diff) / dz);
            for (std::size_t k = 0; k < n; ++k) diff[k] = a[k] - b[k];
        }
        ++est.pairs;
    };
    for (auto [a, b] : pairs) quotient(samples[a], samples[b]);
    for (const auto& [a, b] : extra) quotient(a, b);

    est.k_hat = est.sampled;
    if (f.analytic_lipschitz) {
        est.analytic = f.analytic_lipschitz(m);
        est.k_hat = std::max(est.k_hat, *est.analytic);
    }
    return est;
}

inline double lipschitz_estimate(const NonlinearField& f, const SpaceSpec& space, double m,
                                 std::span<const StateVector> samples, std::span<const double> t_grid,
                                 std::size_t max_pairs = 8192) {
    return estimate_lipschitz(f, space, m, samples, t_grid, max_pairs).k_hat;
}

struct CertificationReport {
    double m = 0.0;
    double lambda_hat = 0.0;
    double lambda_sampled = 0.0;
    std::optional<double> lambda_analytic;
    double k_hat = 0.0;
    double k_sampled = 0.0;
    std::optional<double> k_analytic;
    std::size_t samples_used = 0;
    std::optional<Violation> worst_violation;
    bool certified = true;
    std::vector<std::string> notes;
};

/// Both estimates on one sample set. Not certified iff an uncertifiable
/// boundary violation was found; the violation is then `worst_violation`.
inline CertificationReport quasi_positivity_report(const NonlinearField& f, const SpaceSpec& space, double m,
                                                   const CertifyConfig& cfg = {}) {
    if (!(m > 0.0)) throw DomainError("certification radius must be positive");
    const auto samples = sample_cone_ball(space, m, cfg.sample_count, cfg.seed);
    const auto shift = estimate_shift(f, space, m, samples, cfg.t_grid, cfg.tolerance);
    const auto lip = estimate_lipschitz(f, space, m, samples, cfg.t_grid, cfg.max_pairs, cfg.seed + 1);

    CertificationReport r;
    r.m = m;
    r.lambda_hat = shift.lambda_hat;
    r.lambda_sampled = shift.sampled;
    r.lambda_analytic = shift.analytic;
    r.k_hat = lip.k_hat;
    r.k_sampled = lip.sampled;
    r.k_analytic = lip.analytic;
    r.samples_used = samples.size() * cfg.t_grid.size();
    if (shift.uncertifiable) {
        r.certified = false;
        r.worst_violation = shift.uncertifiable;
        r.notes.push_back("f is negative at a cone-boundary coordinate; no finite shift certifies it");
    }
    if (shift.analytic && shift.sampled > *shift.analytic * (1.0 + 1e-12) + cfg.tolerance) {
        r.notes.push_back("sampled shift " + std::to_string(shift.sampled) + " exceeds the analytic formula " +
                          std::to_string(*shift.analytic) + "; the sampled value is used");
    }
    if (lip.analytic && lip.sampled > *lip.analytic * (1.0 + 1e-9))
        r.notes.push_back("sampled Lipschitz quotient exceeds the analytic constant");
    return r;
}

}  // namespace poscert
