#pragma once

// Reduction benchmarks: model runs whose aggregate dynamics collapse to a
// small ODE with a known or cheaply integrated solution.

#include "poscert/error.hpp"
#include "poscert/models.hpp"
#include "poscert/oracle.hpp"
#include "poscert/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace poscert::bench {

struct BenchmarkResult {
    std::string name;
    std::size_t resolution = 0;
    int nodes_per_window = 0;
    /// max_t |reduced(t) - reference(t)| / max_t |reference(t)|
    double error = 0.0;
    /// Largest spatial spread within a component (oncology only).
    double inhomogeneity = 0.0;
    Trajectory trajectory;
};

namespace detail {

/// Reference values at `times` by RK4 between consecutive output times.
/// Steps never straddle a point of `breaks` (discontinuities of the rhs in t).
template <class Rhs>
std::vector<std::vector<double>> reference_at(Rhs&& rhs, std::vector<double> y0, const std::vector<double>& times,
                                              double step, const std::vector<double>& breaks = {}) {
    std::vector<std::vector<double>> out;
    out.reserve(times.size());
    double t = 0.0;
    auto advance = [&](double to) {
        if (to <= t) return;
        auto shifted = [&, t0 = t](const std::vector<double>& y, double s) { return rhs(y, t0 + s); };
        const double len = to - t;
        y0 = oracle::rk4_final(shifted, y0, len / std::ceil(len / step), len);
        t = to;
    };
    for (double tk : times) {
        for (double b : breaks)
            if (b > t && b < tk) advance(b);
        advance(tk);
        out.push_back(y0);
    }
    return out;
}

inline double relative_sup_error(const std::vector<std::vector<double>>& got,
                                 const std::vector<std::vector<double>>& ref) {
    double err = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < ref.size(); ++k)
        for (std::size_t c = 0; c < ref[k].size(); ++c) {
            err = std::max(err, std::abs(got[k][c] - ref[k][c]));
            scale = std::max(scale, std::abs(ref[k][c]));
        }
    return scale > 0.0 ? err / scale : err;
}

}  // namespace detail

inline SolverConfig benchmark_solver(double horizon, int nodes_per_window) {
    SolverConfig cfg;
    cfg.horizon = horizon;
    cfg.quadrature_nodes_per_window = nodes_per_window;
    cfg.recertify_factor = 1.0;
    return cfg;
}

/// Total population N = S + int I obeys N' = gamma - mu0 N when mu is
/// constant, so N(t) = gamma/mu0 + (N0 - gamma/mu0) e^{-mu0 t}.
inline BenchmarkResult epidemic_mass_balance(std::size_t n_cells, int nodes_per_window, double horizon = 5.0) {
    models::EpidemicParams p;
    auto prob = models::build_epidemic(p, n_cells);
    const auto centers = models::epidemic_centers(p, n_cells);
    const double w = prob.space.weights()[1];
    StateVector y0(n_cells + 1);
    y0[0] = 0.5;
    for (std::size_t j = 0; j < n_cells; ++j) y0[1 + j] = 0.5 * std::exp(-(centers[j] - p.kappa) / 0.5);

    auto mass = [&](const StateVector& y) {
        double s = y[0];
        for (std::size_t j = 0; j < n_cells; ++j) s += w * y[1 + j];
        return s;
    };
    BenchmarkResult r{"epidemic_mass_balance", n_cells, nodes_per_window, 0.0, 0.0, {}};
    r.trajectory = solve(prob, y0, benchmark_solver(horizon, nodes_per_window));
    const double n0 = mass(y0);
    const double eq = p.gamma / p.mu0;
    std::vector<std::vector<double>> got, ref;
    for (std::size_t k = 0; k < r.trajectory.times.size(); ++k) {
        got.push_back({mass(r.trajectory.states[k])});
        ref.push_back({eq + (n0 - eq) * std::exp(-p.mu0 * r.trajectory.times[k])});
    }
    r.error = detail::relative_sup_error(got, ref);
    return r;
}

/// With no births and constant rates the prey total X = int x and the
/// predator y follow X' = -(mu + gamma y) X, y' = (alpha gamma X - delta) y.
inline BenchmarkResult predator_reduction(std::size_t n_cells, int nodes_per_window, double horizon = 10.0) {
    models::PredatorPreyParams p;
    p.beta = {0.0};
    p.mu = {p.mu0};
    p.gamma_pred = {0.2};
    auto prob = models::build_predator_prey(p, n_cells);
    const double w = p.a_max / static_cast<double>(n_cells);
    const auto centers = models::predator_centers(p, n_cells);
    StateVector y0(n_cells + 1, 0.0);
    for (std::size_t j = 0; j < n_cells; ++j) y0[j] = centers[j] < 5.0 ? 0.3 : 0.0;
    y0[n_cells] = 0.5;

    auto reduce = [&](const StateVector& y) {
        double x = 0.0;
        for (std::size_t j = 0; j < n_cells; ++j) x += w * y[j];
        return std::vector<double>{x, y[n_cells]};
    };
    const double mu = p.mu0, gamma = 0.2, alpha = p.alpha, delta = p.delta;
    auto rhs = [=](const std::vector<double>& z, double) {
        return std::vector<double>{-(mu + gamma * z[1]) * z[0], (alpha * gamma * z[0] - delta) * z[1]};
    };

    BenchmarkResult r{"predator_reduction", n_cells, nodes_per_window, 0.0, 0.0, {}};
    r.trajectory = solve(prob, y0, benchmark_solver(horizon, nodes_per_window));
    std::vector<std::vector<double>> got;
    for (const auto& y : r.trajectory.states) got.push_back(reduce(y));
    const auto ref = detail::reference_at(rhs, reduce(y0), r.trajectory.times, 1e-3);
    r.error = detail::relative_sup_error(got, ref);
    return r;
}

/// Spatially constant data and control: the Laplacian drops out and each
/// cell follows the three-species logistic / competition / drug ODE.
inline BenchmarkResult oncology_homogeneous(std::size_t nx, int nodes_per_window, double horizon = 2.0) {
    models::OncologyParams p;
    p.u.times = {0.0, 1.0};
    p.u.values = {{0.2}, {0.05}};
    models::OncologyDomain dom;
    dom.nx = nx;
    auto prob = models::build_oncology(p, dom);
    const std::size_t n = dom.cells();
    const std::vector<double> init{0.3, 0.6, 0.1};
    StateVector y0(3 * n);
    for (std::size_t c = 0; c < 3; ++c) std::fill_n(y0.begin() + static_cast<std::ptrdiff_t>(c * n), n, init[c]);

    auto rhs = [&](const std::vector<double>& y, double t) {
        const double u = p.u.values[p.u.index_at(t)][0];
        return std::vector<double>{
            p.a[0] * (1.0 - y[0] / p.k[0]) * y[0] - (p.alpha12 * y[1] + p.kappa13 * y[2]) * y[0],
            p.a[1] * (1.0 - y[1] / p.k[1]) * y[1] - (p.alpha21 * y[0] + p.kappa23 * y[2]) * y[1],
            -p.a[2] * y[2] + u};
    };

    BenchmarkResult r{"oncology_homogeneous", nx, nodes_per_window, 0.0, 0.0, {}};
    r.trajectory = solve(prob, y0, benchmark_solver(horizon, nodes_per_window));
    const auto ref = detail::reference_at(rhs, init, r.trajectory.times, 1e-4, p.u.times);
    double err = 0.0, scale = 0.0, spread = 0.0;
    for (std::size_t k = 0; k < ref.size(); ++k) {
        const auto& y = r.trajectory.states[k];
        for (std::size_t c = 0; c < 3; ++c) {
            scale = std::max(scale, std::abs(ref[k][c]));
            for (std::size_t j = 0; j < n; ++j) {
                err = std::max(err, std::abs(y[c * n + j] - ref[k][c]));
                spread = std::max(spread, std::abs(y[c * n + j] - y[c * n]));
            }
        }
    }
    r.error = scale > 0.0 ? err / scale : err;
    r.inhomogeneity = spread;
    return r;
}

inline const std::vector<std::string>& benchmark_names() {
    static const std::vector<std::string> names{"epidemic_mass_balance", "predator_reduction",
                                                "oncology_homogeneous"};
    return names;
}

/// Ladder semantics: the epidemic and predator rungs are cell counts and the
/// time step is refined with them (`nodes_per_cell` nodes per cell and window);
/// the oncology rungs are quadrature nodes per window on a fixed small grid.
struct LadderOptions {
    double horizon = 0.0;  // 0: benchmark default
    double nodes_per_cell = 2.0;
    std::size_t oncology_cells = 4;
};

inline BenchmarkResult run_benchmark(std::string_view name, std::size_t rung, const LadderOptions& opt = {}) {
    if (rung == 0) throw DomainError("benchmark resolution must be positive");
    auto nodes_for = [&](std::size_t cells) {
        return std::max(1, static_cast<int>(std::lround(opt.nodes_per_cell * static_cast<double>(cells))));
    };
    if (name == "epidemic_mass_balance")
        return epidemic_mass_balance(rung, nodes_for(rung), opt.horizon > 0.0 ? opt.horizon : 5.0);
    if (name == "predator_reduction")
        return predator_reduction(rung, nodes_for(rung), opt.horizon > 0.0 ? opt.horizon : 10.0);
    if (name == "oncology_homogeneous")
        return oncology_homogeneous(opt.oncology_cells, static_cast<int>(rung), opt.horizon > 0.0 ? opt.horizon : 2.0);
    throw DomainError("unknown benchmark '" + std::string(name) + "'");
}

}  // namespace poscert::bench
