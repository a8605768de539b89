#include "catch_amalgamated.hpp"

#include "poscert/lattice.hpp"
#include "support.hpp"

using namespace poscert;
using Catch::Approx;

TEST_CASE("norm of a scalar is its absolute value") {
    const SpaceSpec s({SpaceSpec::scalar("a")});
    const StateVector v{-3.0};
    CHECK(norm(s, v) == 3.0);
}

TEST_CASE("weighted L1 grid norm") {
    const SpaceSpec s({SpaceSpec::grid("g", 4, 0.5)});
    const StateVector v{1, 1, 1, 1};
    CHECK(norm(s, v) == 2.0);
}

TEST_CASE("product norm sums component norms") {
    const SpaceSpec s({SpaceSpec::scalar("a"), SpaceSpec::grid("g", 2, 1.0)});
    const StateVector v{2, 1, 3};
    CHECK(norm(s, v) == 6.0);
}

TEST_CASE("L2 and Linf grid norms") {
    const SpaceSpec l2({SpaceSpec::grid("g", {0.5, 2.0}, NormKind::L2)});
    const SpaceSpec li({SpaceSpec::grid("g", 2, 3.0, NormKind::Linf)});
    const StateVector v{2.0, -1.0};
    CHECK(norm(l2, v) == Approx(std::sqrt(0.5 * 4 + 2.0 * 1)));
    CHECK(norm(li, v) == 2.0);
}

TEST_CASE("space bookkeeping") {
    const SpaceSpec s({SpaceSpec::scalar("S"), SpaceSpec::grid("I", 3, 0.1), SpaceSpec::scalar("R")});
    CHECK(s.dof() == 5);
    CHECK(s.offset(2) == 4);
    CHECK(s.component_of(3) == 1);
    CHECK(s.coordinate_labels() == std::vector<std::string>{"S", "I[0]", "I[1]", "I[2]", "R"});
    CHECK(s.weights() == std::vector<double>{1.0, 0.1, 0.1, 0.1, 1.0});
}

TEST_CASE("invalid spaces and mismatched vectors are structural errors") {
    CHECK_THROWS_AS(SpaceSpec({SpaceSpec::grid("g", 2, 0.0)}), StructuralError);
    CHECK_THROWS_AS(SpaceSpec({SpaceSpec::grid("g", 2, -1.0)}), StructuralError);
    CHECK_THROWS_AS(SpaceSpec({SpaceSpec::grid("g", std::vector<double>{})}), StructuralError);
    const SpaceSpec s({SpaceSpec::scalar("a")});
    const StateVector v{1.0, 2.0};
    CHECK_THROWS_AS(norm(s, v), StructuralError);
    CHECK_THROWS_AS(lattice_sup(StateVector{1.0}, v), StructuralError);
}

TEST_CASE("lattice sup and abs") {
    CHECK(lattice_sup(StateVector{1, -2}, StateVector{0, 3}) == StateVector{1, 3});
    CHECK(lattice_abs(StateVector{-1, 2}) == StateVector{1, 2});
    CHECK(lattice_abs(StateVector{0, 0}) == StateVector{0, 0});
}

TEST_CASE("min_component") {
    auto a = min_component(StateVector{0.5, 0.0, 2.0});
    CHECK(a.value == 0.0);
    CHECK(a.index == 1);
    auto b = min_component(StateVector{1, -1e-9, 3});
    CHECK(b.value == -1e-9);
    CHECK(b.index == 1);
    auto c = min_component(StateVector{0, 0, 0});
    CHECK(c.value == 0.0);
    CHECK(c.index == 0);
}

TEST_CASE("cone membership uses the relative tolerance") {
    const SpaceSpec s({SpaceSpec::scalar("a"), SpaceSpec::scalar("b")});
    CHECK(in_cone(s, StateVector{1.0, -1e-13}));
    CHECK_FALSE(in_cone(s, StateVector{1.0, -1e-9}));
    CHECK(cone_tolerance(s, StateVector{1.0, 0.0}) == Approx(2e-12));
}

TEST_CASE("norm axioms and monotonicity on the cone (property)") {
    testing::Rng rng(11);
    for (auto kind : {NormKind::L1, NormKind::L2, NormKind::Linf}) {
        const SpaceSpec s({SpaceSpec::scalar("a"), SpaceSpec::grid("g", {0.3, 0.7, 1.1, 0.2}, kind)});
        for (int trial = 0; trial < 200; ++trial) {
            const auto x = testing::random_signed(rng, 5);
            const auto y = testing::random_signed(rng, 5);
            const double c = testing::uniform(rng, -3, 3);
            StateVector sum(5), scaled(5);
            for (int i = 0; i < 5; ++i) {
                sum[i] = x[i] + y[i];
                scaled[i] = c * x[i];
            }
            CHECK(norm(s, sum) <= norm(s, x) + norm(s, y) + 1e-14);
            CHECK(norm(s, scaled) == Approx(std::abs(c) * norm(s, x)).margin(1e-14));

            // 0 <= y1 <= y2 implies norm(y1) <= norm(y2)
            auto y2 = testing::random_nonneg(rng, 5);
            StateVector y1(5);
            for (int i = 0; i < 5; ++i) y1[i] = y2[i] * testing::uniform(rng, 0, 1);
            CHECK(norm(s, y1) <= norm(s, y2));
        }
        CHECK(norm(s, StateVector(5, 0.0)) == 0.0);
    }
}

TEST_CASE("lattice laws (property)") {
    testing::Rng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const auto x = testing::random_signed(rng, 6);
        const auto y = testing::random_signed(rng, 6);
        const auto z = testing::random_signed(rng, 6);
        CHECK(lattice_sup(x, y) == lattice_sup(y, x));
        CHECK(lattice_sup(lattice_sup(x, y), z) == lattice_sup(x, lattice_sup(y, z)));
        CHECK(lattice_sup(x, x) == x);
        const auto s = lattice_sup(x, y);
        for (int i = 0; i < 6; ++i) CHECK(x[i] <= s[i]);
        StateVector neg(6);
        for (int i = 0; i < 6; ++i) neg[i] = -x[i];
        CHECK(lattice_abs(x) == lattice_sup(x, neg));
        CHECK(min_component(lattice_abs(x)).value >= 0.0);
    }
}
