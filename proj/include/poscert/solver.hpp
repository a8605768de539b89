#pragma once

#include "poscert/certify.hpp"
#include "poscert/error.hpp"
#include "poscert/generator.hpp"
#include "poscert/lattice.hpp"
#include "poscert/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace poscert {

/// y' = A y + f(y, t) on a discrete lattice, with the growth bound of A.
struct CauchyProblem {
    std::string name;
    SpaceSpec space;
    GeneratorMatrix generator;
    NonlinearField f;
    GrowthBound growth;
    /// Defaults used whenever the solver certifies f (t_grid, sample count, seed).
    CertifyConfig certify;
    std::vector<std::string> notes;
};

/// Checks dimensions and the Metzler property, then computes the growth bound.
inline CauchyProblem make_problem(std::string name, SpaceSpec space, GeneratorMatrix a, NonlinearField f,
                                  CertifyConfig certify = {}) {
    if (a.dimension() != space.dof()) throw StructuralError("generator dimension does not match the space");
    if (!a.metzler_verified())
        throw StructuralError("generator is not Metzler: the semigroup it generates is not positive");
    if (!f.evaluate) throw StructuralError("nonlinear field has no evaluation function");
    CauchyProblem p{std::move(name), std::move(space), std::move(a), std::move(f), {}, std::move(certify), {}};
    p.growth = growth_bound(p.space, p.generator);
    return p;
}

enum class PicardStart { constant, semigroup_orbit };

struct SolverConfig {
    double picard_tol = 1e-10;
    int max_picard_iters = 200;
    int quadrature_nodes_per_window = 16;
    double window_cap = 1.0;
    double blow_up_norm_threshold = 1e12;
    double horizon = 1.0;

    /// Windows shorter than this count toward the blow-up declaration.
    double short_window = 1e-8;
    int short_window_limit = 5;
    /// Certification radius is this factor times the running radius m; the
    /// cached shift stays valid until m outgrows it.
    double recertify_factor = 2.0;
    /// Sample count used when certifying inside solve (0: the problem's own).
    std::size_t certify_samples = 1024;
    int max_shift_retries = 8;
    PicardStart picard_start = PicardStart::constant;
    /// Keep every quadrature node in the trajectory (otherwise window ends only).
    bool keep_node_states = false;
    std::size_t max_windows = 10'000'000;
    SemigroupOptions semigroup{};
};

struct WindowLength {
    double m = 0.0;
    double t0 = 0.0;
};

/// m = 2 M e^{omega+} ||y0||,  t0 = min{cap, ||y0|| / (m k + gamma + m lambda)}.
/// omega+ = max(omega, 0): for t <= 1 the factor e^{omega t} is bounded by
/// e^{omega+}, not by e^{omega} when omega < 0. With ||y0|| = 0 and a source
/// (gamma > 0) the formula degenerates; t0 = min{cap, 1 / (gamma (k + lambda + 1))}.
inline WindowLength window_length(double y0_norm, const GrowthBound& growth, double k_m, double lambda_m,
                                  double gamma_f, double window_cap = 1.0) {
    if (y0_norm < 0.0 || k_m < 0.0 || lambda_m < 0.0 || gamma_f < 0.0 || growth.M < 1.0)
        throw DomainError("window_length: arguments out of range");
    WindowLength w;
    w.m = 2.0 * growth.M * std::exp(std::max(growth.omega, 0.0)) * y0_norm;
    if (y0_norm == 0.0) {
        w.t0 = gamma_f > 0.0 ? std::min(window_cap, 1.0 / (gamma_f * (k_m + lambda_m + 1.0))) : window_cap;
        return w;
    }
    const double denom = w.m * k_m + gamma_f + w.m * lambda_m;
    w.t0 = denom > 0.0 ? std::min(window_cap, y0_norm / denom) : window_cap;
    return w;
}

/// [M e^{omega+} t (k + lambda)]^n / n!
inline double contraction_bound(int n, double t, const GrowthBound& growth, double k_m, double lambda_m) {
    if (n < 0 || t < 0.0) throw DomainError("contraction_bound: n and t must be nonnegative");
    const double base = growth.M * std::exp(std::max(growth.omega, 0.0)) * t * (k_m + lambda_m);
    double out = 1.0;
    for (int j = 1; j <= n; ++j) out *= base / j;
    return out;
}

struct Window {
    double t_start = 0.0;
    double length = 0.0;
};

namespace detail {

/// g = f(y, t) + lambda y, checked against the cone tolerance.
inline void shifted_integrand(const CauchyProblem& p, double lambda, std::span<const double> y, double t,
                              double rel_tol, std::span<double> g) {
    p.f.evaluate(y, t, g);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += lambda * y[i];
    const auto mc = min_component(g);
    if (mc.value >= 0.0) return;
    const double tau = rel_tol * (1.0 + norm(p.space, y));
    if (mc.value < -tau) {
        const std::size_t i = mc.index;
        const double fi = g[i] - lambda * y[i];
        const double required = y[i] > 0.0 ? -fi / y[i] : std::numeric_limits<double>::infinity();
        throw CertificationMismatch("f + lambda y is negative at coordinate " + std::to_string(i) + " (value " +
                                        std::to_string(mc.value) + ", lambda " + std::to_string(lambda) + ")",
                                    i, mc.value, required);
    }
}

}  // namespace detail

/// One application of the shifted mild-solution map on a window,
///   psi(y)(t) = S(t) y0 + int_0^t S(t-s) [f(y(s), s) + lambda y(s)] ds,
/// S(t) = e^{-lambda t} e^{tA}, with the left-rectangle rule on the uniform
/// nodes of `path`. Evaluated by the recurrence
///   psi_{k+1} = S(h) (psi_k + h g_k),  g_k = f(y_k, t_k) + lambda y_k.
inline std::vector<StateVector> psi_apply(const CauchyProblem& p, double lambda, std::span<const StateVector> path,
                                          std::span<const double> y0, Window w, const SemigroupOptions& opt = {},
                                          double rel_tol = 1e-12) {
    if (path.size() < 2) throw StructuralError("psi_apply: a window needs at least two nodes");
    require_match(p.space, y0);
    const std::size_t dim = y0.size();
    const std::size_t nodes = path.size() - 1;
    const double h = w.length / static_cast<double>(nodes);
    const double decay = std::exp(-lambda * h);
    std::vector<StateVector> out(path.size());
    out[0].assign(y0.begin(), y0.end());
    StateVector g(dim);
    detail::ExpmvWorkspace ws;
    for (std::size_t k = 0; k < nodes; ++k) {
        const double tk = w.t_start + h * static_cast<double>(k);
        detail::shifted_integrand(p, lambda, path[k], tk, rel_tol, g);
        auto& next = out[k + 1];
        next = out[k];
        vec::axpy(h, g, next);
        detail::expmv(p.generator, h, next, next, opt, ws);
        for (double& x : next) x *= decay;
    }
    return out;
}

struct WindowResult {
    double t_start = 0.0;
    double t_len = 0.0;
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> residuals;
    /// r_{n+1} / r_n, recorded while r_n is above the round-off floor.
    std::vector<double> contraction_ratios;
    std::vector<StateVector> nodes;
    double m = 0.0;
    double lambda_m = 0.0;
    double k_m = 0.0;
    /// contraction_bound(1, t_len, growth, k_m, lambda_m)
    double contraction_bound = 0.0;
    double min_component = 0.0;
    int shift_retries = 0;
    bool left_ball = false;
};

/// Banach fixed-point iteration of psi on one window, starting from the
/// constant path y0 (or the linear orbit). Node states are kept in `nodes`.
inline WindowResult picard_window(const CauchyProblem& p, std::span<const double> y0, double t0, double lambda_m,
                                  const SolverConfig& cfg, double t_start = 0.0, double k_m = 0.0,
                                  double m = std::numeric_limits<double>::infinity(), const CertifyConfig& cc = {}) {
    require_match(p.space, y0);
    require_finite(y0, "initial state");
    if (!(t0 > 0.0)) throw DomainError("picard_window: window length must be positive");
    if (cfg.quadrature_nodes_per_window < 1) throw DomainError("picard_window: need at least one quadrature node");
    const auto n = static_cast<std::size_t>(cfg.quadrature_nodes_per_window);
    const double h = t0 / static_cast<double>(n);
    const Window win{t_start, t0};

    std::vector<StateVector> path;
    path.reserve(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        if (cfg.picard_start == PicardStart::semigroup_orbit && k > 0)
            path.push_back(apply_semigroup(p.generator, h * static_cast<double>(k), y0, cfg.semigroup));
        else
            path.emplace_back(y0.begin(), y0.end());
    }

    WindowResult res;
    res.t_start = t_start;
    res.t_len = t0;
    res.m = m;
    res.lambda_m = lambda_m;
    res.k_m = k_m;
    res.contraction_bound = contraction_bound(1, t0, p.growth, k_m, lambda_m);

    double prev = -1.0;
    for (int it = 1; it <= cfg.max_picard_iters; ++it) {
        auto next = psi_apply(p, lambda_m, path, y0, win, cfg.semigroup, cc.tolerance);
        double r = 0.0, scale = 0.0;
        for (std::size_t k = 0; k <= n; ++k) {
            r = std::max(r, norm(p.space, vec::sub(next[k], path[k])));
            scale = std::max(scale, norm(p.space, next[k]));
        }
        path = std::move(next);
        res.iterations = it;
        res.residuals.push_back(r);
        if (prev > 1e-13 * (1.0 + scale) && r > 0.0) res.contraction_ratios.push_back(r / prev);
        prev = r;
        res.residual = r;
        if (r <= cfg.picard_tol * (1.0 + scale)) {
            res.min_component = std::numeric_limits<double>::infinity();
            for (const auto& s : path) {
                const auto mc = min_component(s);
                res.min_component = std::min(res.min_component, mc.value);
                if (mc.value < -cone_tolerance(p.space, s, cc.tolerance))
                    throw PositivityFailure("window state left the cone (min component " + std::to_string(mc.value) +
                                            " at coordinate " + std::to_string(mc.index) + ")");
                if (norm(p.space, s) > m * (1.0 + 1e-9)) res.left_ball = true;
            }
            res.nodes = std::move(path);
            return res;
        }
    }
    throw IterationFailure("Picard iteration did not converge within " + std::to_string(cfg.max_picard_iters) +
                               " iterations (last residual " + std::to_string(res.residual) + ")",
                           res.residual);
}

/// Single exponential step y+ = S(h) y + h S(h) (f(y,t) + lambda y).
inline StateVector exp_step(const CauchyProblem& p, double lambda, std::span<const double> y, double t, double h,
                            const SemigroupOptions& opt = {}) {
    if (!(h > 0.0)) throw DomainError("exp_step: step must be positive");
    require_match(p.space, y);
    StateVector g(y.size());
    detail::shifted_integrand(p, lambda, y, t, 1e-12, g);
    StateVector x(y.begin(), y.end());
    vec::axpy(h, g, x);
    return shifted_apply(p.generator, lambda, h, x, opt);
}

struct BlowUp {
    double time_estimate = 0.0;
    double final_norm = 0.0;
    std::string reason;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<StateVector> states;
    double min_component_overall = 0.0;
    double min_component_time = 0.0;
    std::size_t min_component_index = 0;
    std::optional<BlowUp> blow_up;
    std::vector<WindowResult> windows;
    std::vector<CertificationReport> certifications;
};

namespace detail {

/// Caches (lambda, k) certified on a radius; re-certifies once m outgrows it.
class ShiftCache {
public:
    ShiftCache(const CauchyProblem& p, const SolverConfig& cfg) : p_(p), cfg_(cfg) {
        cc_ = p.certify;
        if (cfg.certify_samples > 0) cc_.sample_count = cfg.certify_samples;
    }

    const CertifyConfig& config() const { return cc_; }

    /// Returns true when a new certification was run.
    bool ensure(double m, std::vector<CertificationReport>& log) {
        if (have_ && m <= radius_) return false;
        radius_ = std::max(m * cfg_.recertify_factor, std::numeric_limits<double>::min());
        auto rep = quasi_positivity_report(p_.f, p_.space, radius_, cc_);
        if (!rep.certified)
            throw CertificationFailure("nonlinearity is not quasi-positive on the ball of radius " +
                                           std::to_string(radius_),
                                       *rep.worst_violation);
        lambda_ = rep.lambda_hat;
        k_ = rep.k_hat;
        have_ = true;
        log.push_back(std::move(rep));
        return true;
    }

    void raise_shift(double lambda) { lambda_ = std::max(lambda_, lambda); }
    double lambda() const { return lambda_; }
    double k() const { return k_; }

private:
    const CauchyProblem& p_;
    const SolverConfig& cfg_;
    CertifyConfig cc_;
    bool have_ = false;
    double radius_ = 0.0;
    double lambda_ = 0.0;
    double k_ = 0.0;
};

inline double zero_source_bound(const CauchyProblem& p, const CertifyConfig& cc, double t) {
    if (p.f.zero_bound) return *p.f.zero_bound;
    const StateVector zero(p.space.dof(), 0.0);
    double g = norm(p.space, p.f(zero, t));
    for (double tg : cc.t_grid) g = std::max(g, norm(p.space, p.f(zero, tg)));
    return g;
}

}  // namespace detail

/// Chains Picard windows from t = 0 to the horizon. Each window restarts
/// from the current state: m, lambda_m, k_m and t0 are recomputed from its
/// norm. Blow-up (norm above threshold, or a run of vanishing windows) ends
/// the run with `blow_up` set; it is an outcome, not an error.
inline Trajectory solve(const CauchyProblem& p, std::span<const double> y0, const SolverConfig& cfg) {
    require_match(p.space, y0);
    require_finite(y0, "initial state");
    if (!(cfg.horizon >= 0.0)) throw DomainError("solve: horizon must be nonnegative");
    if (!(cfg.window_cap > 0.0 && cfg.window_cap <= 1.0)) throw DomainError("solve: window_cap must lie in (0, 1]");
    if (!in_cone(p.space, y0)) throw DomainError("solve: initial state is not in the nonnegative cone");

    Trajectory tr;
    tr.times.push_back(0.0);
    tr.states.emplace_back(y0.begin(), y0.end());
    const auto mc0 = min_component(y0);
    tr.min_component_overall = mc0.value;
    tr.min_component_index = mc0.index;

    detail::ShiftCache cache(p, cfg);
    StateVector y(y0.begin(), y0.end());
    double t = 0.0;
    int short_run = 0;
    const double t_eps = 1e-14 * std::max(1.0, cfg.horizon);

    while (t < cfg.horizon - t_eps) {
        if (tr.windows.size() >= cfg.max_windows) throw IterationFailure("window budget exhausted", 0.0);
        const double ny = norm(p.space, y);
        if (ny > cfg.blow_up_norm_threshold) {
            tr.blow_up = BlowUp{t, ny, "norm exceeded threshold"};
            break;
        }
        const double gamma = detail::zero_source_bound(p, cache.config(), t);
        double m = window_length(ny, p.growth, 0.0, 0.0, gamma).m;
        if (m == 0.0) m = 2.0 * p.growth.M * std::exp(std::max(p.growth.omega, 0.0)) * gamma * cfg.window_cap;
        if (m == 0.0) m = 1e-12;
        cache.ensure(m, tr.certifications);

        WindowResult wr;
        for (int attempt = 0;; ++attempt) {
            const double lambda = cache.lambda(), k = cache.k();
            auto wl = window_length(ny, p.growth, k, lambda, gamma, cfg.window_cap);
            const double len = std::min(wl.t0, cfg.horizon - t);
            try {
                wr = picard_window(p, y, len, lambda, cfg, t, k, m, cache.config());
                wr.shift_retries = attempt;
                break;
            } catch (const CertificationMismatch& e) {
                if (attempt >= cfg.max_shift_retries || !std::isfinite(e.required_shift())) throw;
                cache.raise_shift(std::max(e.required_shift() * 1.25, lambda * 1.01 + 1e-12));
            }
        }

        const std::size_t nn = wr.nodes.size();
        const double h = wr.t_len / static_cast<double>(nn - 1);
        for (std::size_t k = 0; k < nn; ++k) {
            const auto mc = min_component(wr.nodes[k]);
            if (mc.value < tr.min_component_overall) {
                tr.min_component_overall = mc.value;
                tr.min_component_time = t + h * static_cast<double>(k);
                tr.min_component_index = mc.index;
            }
        }
        if (cfg.keep_node_states) {
            for (std::size_t k = 1; k < nn; ++k) {
                tr.times.push_back(t + h * static_cast<double>(k));
                tr.states.push_back(wr.nodes[k]);
            }
        }
        y = wr.nodes.back();
        const double window_start = t;
        t = (cfg.horizon - (t + wr.t_len) <= t_eps) ? cfg.horizon : t + wr.t_len;
        if (!cfg.keep_node_states) {
            tr.times.push_back(t);
            tr.states.push_back(y);
        }
        const bool short_window = wr.t_len < cfg.short_window && t < cfg.horizon;
        wr.nodes.clear();
        wr.nodes.shrink_to_fit();
        tr.windows.push_back(std::move(wr));

        short_run = short_window ? short_run + 1 : 0;
        if (short_run >= cfg.short_window_limit) {
            tr.blow_up = BlowUp{window_start, norm(p.space, y), "windows shrank below the minimum length"};
            break;
        }
    }
    return tr;
}

}  // namespace poscert
