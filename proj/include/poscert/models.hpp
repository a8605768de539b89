#pragma once

#include "poscert/certify.hpp"
#include "poscert/error.hpp"
#include "poscert/generator.hpp"
#include "poscert/lattice.hpp"
#include "poscert/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace poscert::models {

namespace detail {

inline void require(bool ok, const std::string& constraint, const std::string& detail = {}) {
    if (!ok) throw ParameterError(constraint, detail);
}

/// Expands a tabulation to n cells: empty -> fallback, size 1 -> constant.
inline std::vector<double> expand(const std::vector<double>& table, std::size_t n, double fallback,
                                  const std::string& name) {
    if (table.empty()) return std::vector<double>(n, fallback);
    if (table.size() == 1) return std::vector<double>(n, table[0]);
    require(table.size() == n, name + " has one value per cell",
            "got " + std::to_string(table.size()) + " values for " + std::to_string(n) + " cells");
    return table;
}

inline bool finite_all(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Infection-load structured SI model.
//
//   S' = gamma - (mu0 + alpha) S - S T(beta I)
//   I_t = -(nu i I)_i - mu(i) I + phi(i) S T(beta I),   nu kappa I(t, kappa) = alpha S
//
// on loads (kappa, i_max), T(h) = sum_j w_j h_j. Upwind fluxes; the boundary
// inflow alpha S enters the first cell through the generator.
// ---------------------------------------------------------------------------

struct EpidemicParams {
    double gamma = 0.2;
    double mu0 = 0.1;
    double alpha = 0.3;
    double beta = 0.5;
    double nu = 0.1;
    double kappa = 0.1;
    double i_max = 10.0;
    /// Mortality per cell (size 1 = constant, empty = mu0).
    std::vector<double> mu;
    /// Load distribution of new infections per cell; empty = exp(-(i - kappa) / phi_decay).
    std::vector<double> phi;
    double phi_decay = 0.5;
    /// Test-only: admit alpha = 0.
    bool allow_degenerate = false;
};

inline std::vector<double> epidemic_centers(const EpidemicParams& p, std::size_t n_cells) {
    const double w = (p.i_max - p.kappa) / static_cast<double>(n_cells);
    std::vector<double> c(n_cells);
    for (std::size_t j = 0; j < n_cells; ++j) c[j] = p.kappa + (static_cast<double>(j) + 0.5) * w;
    return c;
}

inline double epidemic_shift(const EpidemicParams& p, double m) { return m * p.beta; }

inline CauchyProblem build_epidemic(const EpidemicParams& p, std::size_t n_cells) {
    using detail::require;
    require(p.beta > 0.0, "beta > 0");
    require(p.mu0 > 0.0, "mu0 > 0");
    require(p.nu > 0.0, "nu > 0");
    require(p.allow_degenerate ? p.alpha >= 0.0 : p.alpha > 0.0, "alpha > 0");
    require(p.gamma >= 0.0, "gamma >= 0");
    require(p.kappa > 0.0, "kappa > 0");
    require(p.i_max > p.kappa, "i_max > kappa");
    require(n_cells >= 2, "n_cells >= 2");

    const std::size_t n = n_cells;
    const double w = (p.i_max - p.kappa) / static_cast<double>(n);
    const auto centers = epidemic_centers(p, n);
    const auto mu = detail::expand(p.mu, n, p.mu0, "mu");
    require(detail::finite_all(mu), "mu is finite");
    for (double v : mu) require(v >= p.mu0, "mu(i) >= mu0", "found " + std::to_string(v));

    std::vector<double> phi;
    if (p.phi.empty()) {
        require(p.phi_decay > 0.0, "phi_decay > 0");
        phi.resize(n);
        for (std::size_t j = 0; j < n; ++j) phi[j] = std::exp(-(centers[j] - p.kappa) / p.phi_decay);
    } else {
        phi = detail::expand(p.phi, n, 0.0, "phi");
    }
    require(detail::finite_all(phi), "phi is finite");
    for (double v : phi) require(v >= 0.0, "phi >= 0");
    const double mass = w * std::accumulate(phi.begin(), phi.end(), 0.0);
    require(mass > 0.0, "integral of phi is positive");
    const double factor = 1.0 / mass;
    for (double& v : phi) v *= factor;

    SpaceSpec space({SpaceSpec::scalar("S"), SpaceSpec::grid("I", n, w, NormKind::L1)});

    std::vector<Triplet> t;
    t.push_back({0, 0, -(p.mu0 + p.alpha)});
    if (p.alpha > 0.0) t.push_back({1, 0, p.alpha / w});
    for (std::size_t j = 0; j < n; ++j) {
        const double face = p.kappa + static_cast<double>(j + 1) * w;
        const double rate = p.nu * face / w;
        t.push_back({1 + j, 1 + j, -rate - mu[j]});
        if (j + 1 < n) t.push_back({2 + j, 1 + j, rate});
    }
    GeneratorMatrix a(n + 1, std::move(t));

    NonlinearField f;
    f.evaluate = [=, beta = p.beta, gamma = p.gamma](std::span<const double> y, double, std::span<double> out) {
        const double s = y[0];
        double load = 0.0;
        for (std::size_t j = 0; j < n; ++j) load += w * y[1 + j];
        const double incidence = s * beta * load;
        out[0] = gamma - incidence;
        for (std::size_t j = 0; j < n; ++j) out[1 + j] = phi[j] * incidence;
    };
    f.analytic_shift = [beta = p.beta](double m) { return m * beta; };
    f.analytic_lipschitz = [beta = p.beta](double m) { return 2.0 * beta * m; };
    f.zero_bound = p.gamma;

    auto prob = make_problem("epidemic", std::move(space), std::move(a), std::move(f));
    if (std::abs(factor - 1.0) > 1e-8)
        prob.notes.push_back("phi renormalized to unit mass on the truncated grid (factor " + std::to_string(factor) +
                             ")");
    return prob;
}

// ---------------------------------------------------------------------------
// Age-structured prey x(t, a) with predator y(t).
//
//   x_t + x_a = -mu(a) x - y gamma(a) x,   x(t, 0) = int beta(a) x(t, a) da
//   y' = alpha y int gamma(a) x(t, a) da - delta y
// ---------------------------------------------------------------------------

struct PredatorPreyParams {
    double alpha = 0.5;
    double delta = 0.3;
    double a_max = 30.0;
    double mu0 = 0.1;
    std::vector<double> mu;          // empty = mu0
    std::vector<double> gamma_pred;  // empty = 0.2
    std::vector<double> beta;        // empty = 0.4 on ages [1, 6], 0 elsewhere
};

inline std::vector<double> predator_centers(const PredatorPreyParams& p, std::size_t n_cells) {
    const double w = p.a_max / static_cast<double>(n_cells);
    std::vector<double> c(n_cells);
    for (std::size_t j = 0; j < n_cells; ++j) c[j] = (static_cast<double>(j) + 0.5) * w;
    return c;
}

inline double predator_shift(const PredatorPreyParams& p, std::size_t n_cells, double m) {
    const auto g = detail::expand(p.gamma_pred, n_cells, 0.2, "gamma_pred");
    return m * *std::max_element(g.begin(), g.end());
}

inline CauchyProblem build_predator_prey(const PredatorPreyParams& p, std::size_t n_cells) {
    using detail::require;
    require(p.alpha > 0.0 && p.alpha < 1.0, "alpha in ]0,1[");
    require(p.delta > 0.0, "delta > 0");
    require(p.mu0 > 0.0, "mu0 > 0");
    require(p.a_max > 0.0, "a_max > 0");
    require(n_cells >= 2, "n_cells >= 2");

    const std::size_t n = n_cells;
    const double w = p.a_max / static_cast<double>(n);
    const auto centers = predator_centers(p, n);
    const auto mu = detail::expand(p.mu, n, p.mu0, "mu");
    const auto gam = detail::expand(p.gamma_pred, n, 0.2, "gamma_pred");
    std::vector<double> beta;
    if (p.beta.empty()) {
        beta.resize(n);
        for (std::size_t j = 0; j < n; ++j) beta[j] = (centers[j] >= 1.0 && centers[j] <= 6.0) ? 0.4 : 0.0;
    } else {
        beta = detail::expand(p.beta, n, 0.0, "beta");
    }
    for (const auto* tab : {&mu, &gam, &std::as_const(beta)})
        require(detail::finite_all(*tab), "rate tables are finite");
    for (double v : mu) require(v >= p.mu0, "mu(a) >= mu0 > 0", "found " + std::to_string(v));
    for (double v : gam) require(v >= 0.0, "gamma(a) >= 0");
    for (double v : beta) require(v >= 0.0, "beta(a) >= 0");

    SpaceSpec space({SpaceSpec::grid("x", n, w, NormKind::L1), SpaceSpec::scalar("y")});

    std::vector<Triplet> t;
    for (std::size_t j = 0; j < n; ++j) {
        t.push_back({j, j, -1.0 / w - mu[j]});
        if (j + 1 < n) t.push_back({j + 1, j, 1.0 / w});
        // renewal: newborn flux sum_j w beta_j x_j spread over the age-0 cell of width w
        if (beta[j] > 0.0) t.push_back({0, j, beta[j]});
    }
    t.push_back({n, n, -p.delta});
    GeneratorMatrix a(n + 1, std::move(t));

    const double gmax = *std::max_element(gam.begin(), gam.end());
    NonlinearField f;
    f.evaluate = [=, alpha = p.alpha](std::span<const double> y, double, std::span<double> out) {
        const double z = y[n];
        double eaten = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            out[j] = -z * gam[j] * y[j];
            eaten += w * gam[j] * y[j];
        }
        out[n] = alpha * z * eaten;
    };
    f.analytic_shift = [gmax](double m) { return m * gmax; };
    f.analytic_lipschitz = [gmax, alpha = p.alpha](double m) { return (1.0 + alpha) * gmax * m; };
    f.zero_bound = 0.0;

    return make_problem("predator_prey", std::move(space), std::move(a), std::move(f));
}

// ---------------------------------------------------------------------------
// Tumour / normal tissue / drug reaction-diffusion system with Neumann walls.
//
//   y1_t = d1 Lap y1 + a1 (1 - y1/k1) y1 - (alpha12 y2 + kappa13 y3) y1
//   y2_t = d2 Lap y2 + a2 (1 - y2/k2) y2 - (alpha21 y1 + kappa23 y3) y2
//   y3_t = d3 Lap y3 - a3 y3 + u
// ---------------------------------------------------------------------------

/// 1D interval (ny == 1) or 2D rectangle, uniform cells.
struct OncologyDomain {
    std::size_t nx = 50;
    std::size_t ny = 1;
    double lx = 1.0;
    double ly = 1.0;

    std::size_t cells() const { return nx * ny; }
    double cell_measure() const {
        return ny == 1 ? lx / static_cast<double>(nx) : (lx / static_cast<double>(nx)) * (ly / static_cast<double>(ny));
    }
};

/// Drug flux u(x, t): piecewise constant in time, value `values[k]` on
/// [times[k], times[k+1]); each sample is per cell or a single constant.
struct ControlSchedule {
    std::vector<double> times;
    std::vector<std::vector<double>> values;

    bool empty() const { return values.empty(); }

    std::size_t index_at(double t) const {
        if (times.empty()) return 0;
        auto it = std::upper_bound(times.begin(), times.end(), t);
        return it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    }
};

struct OncologyParams {
    std::array<double, 3> d{0.01, 0.005, 0.02};
    std::array<double, 3> a{1.0, 0.6, 0.5};
    std::array<double, 2> k{1.0, 1.0};
    double alpha12 = 0.3;
    double alpha21 = 0.2;
    double kappa13 = 0.8;
    double kappa23 = 0.2;
    ControlSchedule u;
};

/// max{m(a1/k1 - alpha12 - kappa13), m(a2/k2 - alpha21 - kappa23), a3} as printed.
inline double oncology_printed_shift(const OncologyParams& p, double m) {
    return std::max({m * (p.a[0] / p.k[0] - p.alpha12 - p.kappa13), m * (p.a[1] / p.k[1] - p.alpha21 - p.kappa23),
                     p.a[2]});
}

/// Neumann (reflecting ghost-cell) Laplacian on the domain, scaled by d.
inline std::vector<Triplet> neumann_laplacian(const OncologyDomain& dom, double d, std::size_t offset = 0) {
    std::vector<Triplet> t;
    const double hx = dom.lx / static_cast<double>(dom.nx);
    const double hy = dom.ly / static_cast<double>(dom.ny);
    const double cx = d / (hx * hx);
    const double cy = dom.ny > 1 ? d / (hy * hy) : 0.0;
    for (std::size_t iy = 0; iy < dom.ny; ++iy)
        for (std::size_t ix = 0; ix < dom.nx; ++ix) {
            const std::size_t c = offset + iy * dom.nx + ix;
            double diag = 0.0;
            auto link = [&](std::size_t nb, double coef) {
                t.push_back({c, nb, coef});
                diag -= coef;
            };
            if (ix > 0) link(c - 1, cx);
            if (ix + 1 < dom.nx) link(c + 1, cx);
            if (dom.ny > 1) {
                if (iy > 0) link(c - dom.nx, cy);
                if (iy + 1 < dom.ny) link(c + dom.nx, cy);
            }
            if (diag != 0.0) t.push_back({c, c, diag});
        }
    return t;
}

inline CauchyProblem build_oncology(const OncologyParams& p, const OncologyDomain& dom) {
    using detail::require;
    for (int i = 0; i < 3; ++i) {
        require(p.d[i] > 0.0, "d_i > 0");
        require(p.a[i] > 0.0, "a_i > 0");
    }
    require(p.k[0] > 0.0 && p.k[1] > 0.0, "k_i > 0");
    require(p.alpha12 > 0.0 && p.alpha21 > 0.0, "alpha_ij > 0");
    require(p.kappa23 > 0.0, "kappa23 > 0");
    require(p.kappa13 > p.kappa23, "kappa13 > kappa23");
    require(dom.nx >= 1 && dom.ny >= 1, "grid has at least one cell per axis");
    require(dom.lx > 0.0 && dom.ly > 0.0, "domain extents > 0");
    const std::size_t n = dom.cells();
    require(p.u.times.size() == p.u.values.size() || (p.u.times.empty() && p.u.values.size() <= 1),
            "control has one sample per time");
    require(std::is_sorted(p.u.times.begin(), p.u.times.end()), "control times are increasing");
    std::vector<std::vector<double>> u;
    for (const auto& s : p.u.values) {
        require(s.size() == 1 || s.size() == n, "control sample has one value per cell");
        for (double v : s) require(std::isfinite(v) && v >= 0.0, "u >= 0");
        u.push_back(s.size() == 1 ? std::vector<double>(n, s[0]) : s);
    }

    const double w = dom.cell_measure();
    SpaceSpec space({SpaceSpec::grid("y1", n, w, NormKind::L2), SpaceSpec::grid("y2", n, w, NormKind::L2),
                     SpaceSpec::grid("y3", n, w, NormKind::L2)});
    std::vector<Triplet> t;
    for (std::size_t c = 0; c < 3; ++c) {
        auto block = neumann_laplacian(dom, p.d[c], c * n);
        t.insert(t.end(), block.begin(), block.end());
    }
    GeneratorMatrix a(3 * n, std::move(t));

    const ControlSchedule sched{p.u.times, u};
    NonlinearField f;
    f.evaluate = [=](std::span<const double> y, double time, std::span<double> out) {
        const double* y1 = y.data();
        const double* y2 = y1 + n;
        const double* y3 = y2 + n;
        const std::vector<double>* ut = sched.values.empty() ? nullptr : &sched.values[sched.index_at(time)];
        for (std::size_t j = 0; j < n; ++j) {
            out[j] = p.a[0] * (1.0 - y1[j] / p.k[0]) * y1[j] - (p.alpha12 * y2[j] + p.kappa13 * y3[j]) * y1[j];
            out[n + j] = p.a[1] * (1.0 - y2[j] / p.k[1]) * y2[j] - (p.alpha21 * y1[j] + p.kappa23 * y3[j]) * y2[j];
            out[2 * n + j] = -p.a[2] * y3[j] + (ut ? (*ut)[j] : 0.0);
        }
    };
    f.analytic_shift = [p](double m) { return oncology_printed_shift(p, m); };
    double ubound = 0.0;
    for (const auto& s : u) {
        double ss = 0.0;
        for (double v : s) ss += w * v * v;
        ubound = std::max(ubound, std::sqrt(ss));
    }
    f.zero_bound = ubound;

    CertifyConfig cc;
    if (!p.u.times.empty()) cc.t_grid = p.u.times;
    auto prob = make_problem("oncology", std::move(space), std::move(a), std::move(f), cc);
    prob.notes.push_back("oncology shift: max(printed formula, sampled estimate); the sampled value is authoritative");
    return prob;
}

struct OncologyShift {
    double value = 0.0;
    double printed = 0.0;
    double sampled = 0.0;
    /// The sampled requirement exceeds the printed formula.
    bool discrepancy = false;
};

inline OncologyShift oncology_shift(const OncologyParams& p, const OncologyDomain& dom, double m,
                                    const CertifyConfig& cfg = {}) {
    auto prob = build_oncology(p, dom);
    NonlinearField bare = prob.f;
    bare.analytic_shift = nullptr;
    const auto samples = sample_cone_ball(prob.space, m, cfg.sample_count, cfg.seed);
    const auto est = estimate_shift(bare, prob.space, m, samples, prob.certify.t_grid, cfg.tolerance);
    OncologyShift s;
    s.printed = oncology_printed_shift(p, m);
    s.sampled = est.sampled;
    s.value = std::max(s.printed, s.sampled);
    s.discrepancy = s.sampled > s.printed;
    return s;
}

// ---------------------------------------------------------------------------
// Hand-written system of scalar compartments:
//   y' = A y + c + l .* y + q .* y.^2     (componentwise)
// ---------------------------------------------------------------------------

struct ScalarSystemParams {
    std::vector<std::vector<double>> generator;
    std::vector<double> constant;
    std::vector<double> linear;
    std::vector<double> quadratic;
};

inline CauchyProblem build_scalar_system(const ScalarSystemParams& p) {
    const std::size_t n = p.constant.size();
    detail::require(n >= 1, "scalar system has at least one compartment");
    auto expand = [&](const std::vector<double>& v, const char* name) {
        return detail::expand(v, n, 0.0, name);
    };
    const auto l = expand(p.linear, "linear");
    const auto q = expand(p.quadratic, "quadratic");
    const auto c = p.constant;
    GeneratorMatrix a = p.generator.empty() ? GeneratorMatrix::zero(n) : GeneratorMatrix::from_dense(p.generator);
    detail::require(a.dimension() == n, "generator is n x n");

    std::vector<Component> comps;
    for (std::size_t i = 0; i < n; ++i) comps.push_back(SpaceSpec::scalar("y" + std::to_string(i)));
    NonlinearField f;
    f.evaluate = [=](std::span<const double> y, double, std::span<double> out) {
        for (std::size_t i = 0; i < n; ++i) out[i] = c[i] + l[i] * y[i] + q[i] * y[i] * y[i];
    };
    return make_problem("scalar_system", SpaceSpec(std::move(comps)), std::move(a), std::move(f));
}

}  // namespace poscert::models
