#include "catch_amalgamated.hpp"

#include "poscert/models.hpp"
#include "poscert/oracle.hpp"
#include "poscert/solver.hpp"
#include "support.hpp"

#include <cmath>

using namespace poscert;
using Catch::Approx;

namespace {

CauchyProblem scalar(double a, double c = 0.0, double l = 0.0, double q = 0.0) {
    models::ScalarSystemParams p;
    p.generator = {{a}};
    p.constant = {c};
    p.linear = {l};
    p.quadratic = {q};
    return models::build_scalar_system(p);
}

GrowthBound gb(double m, double omega) {
    GrowthBound g;
    g.M = m;
    g.omega = omega;
    return g;
}

// Full vector field A y + f(y, t) for the RK4 oracle.
auto full_rhs(const CauchyProblem& p) {
    return [&p, a = oracle::DenseMatrix::from(p.generator)](const std::vector<double>& y, double t) {
        auto out = a.apply(y);
        const auto fy = p.f(y, t);
        for (std::size_t i = 0; i < y.size(); ++i) out[i] += fy[i];
        return out;
    };
}

StateVector epidemic_initial(const models::EpidemicParams& p, std::size_t n) {
    const auto c = models::epidemic_centers(p, n);
    StateVector y(n + 1);
    y[0] = 0.5;
    for (std::size_t j = 0; j < n; ++j) y[1 + j] = 0.5 * std::exp(-c[j] / 0.5);
    return y;
}

}  // namespace

TEST_CASE("window_length examples") {
    auto w = window_length(1.0, gb(1, 0), 1.0, 1.0, 0.0);
    CHECK(w.m == 2.0);
    CHECK(w.t0 == Approx(0.25));
    CHECK(window_length(1.0, gb(1, 0), 0.0, 0.0, 0.0).t0 == 1.0);
    CHECK(window_length(1.0, gb(1, 1), 0.0, 0.0, 0.0).m == Approx(2.0 * std::exp(1.0)));
    CHECK(window_length(1.0, gb(2, 0), 0.0, 0.0, 0.0).m == Approx(4.0));
    // a negative growth rate does not shrink m below 2 M ||y0||
    CHECK(window_length(1.0, gb(1, -3), 0.0, 0.0, 0.0).m == 2.0);
    CHECK(window_length(1.0, gb(1, 0), 0.0, 0.0, 0.0, 0.3).t0 == 0.3);
    CHECK(window_length(0.0, gb(1, 0), 1.0, 1.0, 2.0).t0 == Approx(1.0 / 6.0));
    CHECK_THROWS_AS(window_length(-1.0, gb(1, 0), 0, 0, 0), DomainError);
    CHECK_THROWS_AS(window_length(1.0, gb(0.5, 0), 0, 0, 0), DomainError);
}

TEST_CASE("contraction_bound examples") {
    CHECK(contraction_bound(0, 0.5, gb(1, 0), 1, 1) == 1.0);
    CHECK(contraction_bound(1, 0.5, gb(1, 0), 1, 1) == Approx(1.0));
    CHECK(contraction_bound(2, 0.5, gb(1, 0), 1, 1) == Approx(0.5));
    CHECK(contraction_bound(3, 1.0, gb(1, 0), 1, 0) == Approx(1.0 / 6.0));
    CHECK_THROWS_AS(contraction_bound(-1, 0.5, gb(1, 0), 1, 1), DomainError);
}

TEST_CASE("psi_apply with f = 0 and no shift follows the semigroup orbit") {
    testing::Rng rng(3);
    auto a = testing::random_metzler(rng, 6);
    NonlinearField f;
    f.evaluate = [](auto, double, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
    auto p = make_problem("zero", testing::scalars(6), a, f);
    const auto y0 = testing::random_nonneg(rng, 6);
    const std::vector<StateVector> path(9, y0);
    const auto out = psi_apply(p, 0.0, path, y0, {0.0, 0.8});
    for (std::size_t k = 0; k < out.size(); ++k)
        CHECK(testing::rel_diff(out[k], apply_semigroup(a, 0.1 * static_cast<double>(k), y0)) <= 1e-12);
}

TEST_CASE("psi_apply is exact for a constant source with A = 0") {
    auto p = scalar(0.0, 2.0);
    const StateVector y0{1.0};
    const std::vector<StateVector> path(5, y0);
    const auto out = psi_apply(p, 0.0, path, y0, {0.0, 1.0});
    for (std::size_t k = 0; k < out.size(); ++k) CHECK(out[k][0] == Approx(1.0 + 2.0 * 0.25 * static_cast<double>(k)));
}

TEST_CASE("psi_apply rejects a window with a single node") {
    auto p = scalar(-1.0);
    const std::vector<StateVector> path(1, StateVector{1.0});
    CHECK_THROWS_AS(psi_apply(p, 0.0, path, StateVector{1.0}, {0.0, 1.0}), StructuralError);
}

TEST_CASE("picard_window: linear problem converges in one iteration") {
    testing::Rng rng(4);
    NonlinearField f;
    f.evaluate = [](auto, double, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
    auto p = make_problem("zero", testing::scalars(3), GeneratorMatrix::zero(3), f);
    SolverConfig cfg;
    const auto r = picard_window(p, StateVector{1, 2, 3}, 0.5, 0.0, cfg);
    CHECK(r.iterations == 1);
    CHECK(r.residual == 0.0);
    CHECK(r.nodes.back() == StateVector{1, 2, 3});
}

TEST_CASE("picard_window: logistic growth against the closed form") {
    const double rate = 1.0, cap = 2.0;
    auto p = scalar(0.0, 0.0, rate, -rate / cap);
    SolverConfig cfg;
    cfg.quadrature_nodes_per_window = 4096;
    const double lambda = rate / cap * 4.0;  // covers -f/y on [0, 4]
    const auto r = picard_window(p, StateVector{0.5}, 0.5, lambda, cfg, 0.0, 4.0, 4.0);
    CHECK(r.nodes.back()[0] == Approx(oracle::logistic(rate, cap, 0.5, 0.5)).margin(5e-4));
    for (double ratio : r.contraction_ratios) CHECK(ratio <= r.contraction_bound + 0.05);
}

TEST_CASE("picard_window: epidemic window agrees with RK4 on the full system") {
    models::EpidemicParams ep;
    const std::size_t n = 20;
    auto p = models::build_epidemic(ep, n);
    const auto y0 = epidemic_initial(ep, n);
    SolverConfig cfg;
    cfg.quadrature_nodes_per_window = 2000;
    const double t0 = 0.2;
    const auto r = picard_window(p, y0, t0, models::epidemic_shift(ep, 2.0), cfg);
    const auto ref = oracle::rk4_final(full_rhs(p), y0, 1e-4, t0);
    CHECK(testing::rel_diff(r.nodes.back(), ref) <= 1e-4);
    CHECK(r.min_component >= 0.0);
}

TEST_CASE("picard_window: both starting paths reach the same fixed point") {
    models::EpidemicParams ep;
    auto p = models::build_epidemic(ep, 12);
    const auto y0 = epidemic_initial(ep, 12);
    SolverConfig a, b;
    a.quadrature_nodes_per_window = b.quadrature_nodes_per_window = 64;
    b.picard_start = PicardStart::semigroup_orbit;
    const auto ra = picard_window(p, y0, 0.3, 1.0, a);
    const auto rb = picard_window(p, y0, 0.3, 1.0, b);
    for (std::size_t k = 0; k < ra.nodes.size(); ++k)
        CHECK(norm(p.space, vec::sub(ra.nodes[k], rb.nodes[k])) <= 10.0 * a.picard_tol * (1.0 + norm(p.space, y0)));
}

TEST_CASE("picard_window error paths") {
    auto decay = scalar(0.0, 0.0, -1.0);
    SolverConfig cfg;
    // shift 0 leaves f + lambda y = -y negative: the certificate does not cover the state
    CHECK_THROWS_AS(picard_window(decay, StateVector{1.0}, 0.5, 0.0, cfg), CertificationMismatch);
    try {
        picard_window(decay, StateVector{1.0}, 0.5, 0.0, cfg);
    } catch (const CertificationMismatch& e) {
        CHECK(e.component() == 0);
        CHECK(e.required_shift() == Approx(1.0));
    }
    SolverConfig one = cfg;
    one.max_picard_iters = 1;
    CHECK_THROWS_AS(picard_window(scalar(0.0, 0.0, 0.0, 1.0), StateVector{1.0}, 0.2, 2.0, one), IterationFailure);
    CHECK_THROWS_AS(picard_window(decay, StateVector{1.0}, 0.0, 1.0, cfg), DomainError);
}

TEST_CASE("exp_step example") {
    auto p = scalar(-1.0, 0.0, 0.0);
    const auto y = exp_step(p, 2.0, StateVector{3.0}, 0.0, 0.1);
    CHECK(y[0] == Approx(std::exp(-0.3) * 3.0 + 0.1 * std::exp(-0.3) * 6.0).epsilon(1e-13));
    CHECK_THROWS_AS(exp_step(p, 2.0, StateVector{3.0}, 0.0, 0.0), DomainError);
}

TEST_CASE("solve with f = 0 reproduces the semigroup orbit") {
    testing::Rng rng(8);
    auto a = testing::random_metzler(rng, 5);
    NonlinearField f;
    f.evaluate = [](auto, double, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
    auto p = make_problem("zero", testing::scalars(5), a, f);
    const auto y0 = testing::random_nonneg(rng, 5);
    SolverConfig cfg;
    cfg.horizon = 3.0;
    const auto tr = solve(p, y0, cfg);
    REQUIRE_FALSE(tr.blow_up);
    CHECK(tr.times.back() == 3.0);
    for (std::size_t k = 0; k < tr.times.size(); ++k)
        CHECK(testing::rel_diff(tr.states[k], apply_semigroup(a, tr.times[k], y0)) <= 1e-9);
}

TEST_CASE("solve: horizon zero returns the initial state only") {
    auto p = scalar(-1.0, 1.0);
    SolverConfig cfg;
    cfg.horizon = 0.0;
    const auto tr = solve(p, StateVector{0.5}, cfg);
    CHECK(tr.times == std::vector<double>{0.0});
    CHECK(tr.states.front() == StateVector{0.5});
    CHECK(tr.windows.empty());
}

TEST_CASE("solve flags blow-up of y' = y^2 near t = 1") {
    auto p = scalar(0.0, 0.0, 0.0, 1.0);
    SolverConfig cfg;
    cfg.horizon = 2.0;
    cfg.quadrature_nodes_per_window = 128;
    const auto tr = solve(p, StateVector{1.0}, cfg);
    REQUIRE(tr.blow_up);
    CHECK(tr.blow_up->time_estimate >= 0.9);
    CHECK(tr.blow_up->time_estimate <= 1.1);
    for (std::size_t k = 0; k < tr.times.size(); ++k)
        if (tr.times[k] <= 0.9) CHECK(tr.states[k][0] == Approx(oracle::blow_up_square(1.0, tr.times[k])).epsilon(1e-2));
}

TEST_CASE("solve rejects states outside the cone and bad settings") {
    auto p = scalar(-1.0);
    SolverConfig cfg;
    CHECK_THROWS_AS(solve(p, StateVector{-0.1}, cfg), DomainError);
    cfg.horizon = -1.0;
    CHECK_THROWS_AS(solve(p, StateVector{0.1}, cfg), DomainError);
    cfg.horizon = 1.0;
    cfg.window_cap = 2.0;
    CHECK_THROWS_AS(solve(p, StateVector{0.1}, cfg), DomainError);
    CHECK_THROWS_AS(solve(p, StateVector{0.1, 0.2}, SolverConfig{}), StructuralError);
}

TEST_CASE("solve keeps node states on request") {
    auto p = scalar(-1.0, 1.0);
    SolverConfig cfg;
    cfg.horizon = 0.5;
    cfg.quadrature_nodes_per_window = 10;
    cfg.keep_node_states = true;
    const auto tr = solve(p, StateVector{0.0}, cfg);
    CHECK(tr.times.size() == 1 + 10 * tr.windows.size());
    CHECK(tr.times.back() == 0.5);
}

TEST_CASE("doubling the nodes halves the error (first-order quadrature)") {
    models::EpidemicParams ep;
    const std::size_t n = 20;
    auto p = models::build_epidemic(ep, n);
    const auto y0 = epidemic_initial(ep, n);
    const auto ref = oracle::rk4_final(full_rhs(p), y0, 1e-4, 1.0);
    std::vector<double> errs;
    for (int nodes : {32, 64, 128}) {
        SolverConfig cfg;
        cfg.horizon = 1.0;
        cfg.quadrature_nodes_per_window = nodes;
        const auto tr = solve(p, y0, cfg);
        errs.push_back(testing::rel_diff(tr.states.back(), ref));
    }
    CHECK(errs[0] / errs[1] == Approx(2.0).epsilon(0.2));
    CHECK(errs[1] / errs[2] == Approx(2.0).epsilon(0.2));
}

TEST_CASE("trajectories stay in the cone for random Metzler problems (property)") {
    testing::Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = testing::index(rng, 1, 8);
        auto a = testing::random_metzler(rng, n, 0.4, -5.0, 0.5);
        const auto q = testing::random_nonneg(rng, n, 1.0);
        NonlinearField f;
        f.evaluate = [q](std::span<const double> y, double, std::span<double> out) {
            for (std::size_t i = 0; i < y.size(); ++i) out[i] = -q[i] * y[i] * y[i];
        };
        auto p = make_problem("random", testing::scalars(n), a, f);
        SolverConfig cfg;
        cfg.horizon = 2.0;
        const auto tr = solve(p, testing::random_nonneg(rng, n, 2.0), cfg);
        CHECK(tr.min_component_overall >= 0.0);
    }
}
