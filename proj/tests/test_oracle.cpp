#include "catch_amalgamated.hpp"

#include "poscert/oracle.hpp"
#include "support.hpp"

#include <cmath>

using namespace poscert;
using namespace poscert::oracle;
using Catch::Approx;

TEST_CASE("dense exponential of closed-form cases") {
    auto d = dense_expm(DenseMatrix::from_rows({{-1, 0}, {0, 2}}));
    CHECK(d(0, 0) == Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(d(1, 1) == Approx(std::exp(2.0)).epsilon(1e-14));
    CHECK(d(0, 1) == 0.0);

    auto n = dense_expm(DenseMatrix::from_rows({{0, 1}, {0, 0}}));
    CHECK(n(0, 0) == Approx(1.0));
    CHECK(n(0, 1) == Approx(1.0));
    CHECK(n(1, 0) == Approx(0.0).margin(1e-15));

    const double th = 2.5;
    auto r = dense_expm(DenseMatrix::from_rows({{0, -th}, {th, 0}}));
    CHECK(r(0, 0) == Approx(std::cos(th)).margin(1e-13));
    CHECK(r(1, 0) == Approx(std::sin(th)).margin(1e-13));
}

TEST_CASE("dense exponential needs scaling for large norms") {
    // exp(diag(30, -30)) and the inverse relation exp(A) exp(-A) = I
    auto big = dense_expm(DenseMatrix::from_rows({{30, 0}, {0, -30}}));
    CHECK(big(0, 0) == Approx(std::exp(30.0)).epsilon(1e-12));
    CHECK(big(1, 1) == Approx(std::exp(-30.0)).epsilon(1e-12));

    testing::Rng rng(3);
    const auto a = DenseMatrix::from(testing::random_metzler(rng, 10, 0.5, -8, 2));
    const auto prod = dense_expm(a) * dense_expm(-1.0 * a);
    CHECK((prod - DenseMatrix::identity(10)).max_abs() <= 1e-10);
}

TEST_CASE("dense exponential refuses large matrices") {
    CHECK_THROWS_AS(dense_expm(DenseMatrix(kDenseExpmMaxDim + 1)), DomainError);
}

TEST_CASE("rk4 is fourth order on y' = -y") {
    auto rhs = [](const std::vector<double>& y, double) { return std::vector<double>{-y[0]}; };
    const double e1 = std::abs(rk4_final(rhs, {1.0}, 0.1, 1.0)[0] - std::exp(-1.0));
    const double e2 = std::abs(rk4_final(rhs, {1.0}, 0.05, 1.0)[0] - std::exp(-1.0));
    CHECK(e1 / e2 == Approx(16.0).epsilon(0.05));
}

TEST_CASE("rk4 lands exactly on the horizon and sees time") {
    auto rhs = [](const std::vector<double>&, double t) { return std::vector<double>{t}; };
    const auto path = rk4_solve(rhs, {0.0}, 0.3, 1.0);
    CHECK(path.size() == 5);
    CHECK(path.back()[0] == Approx(0.5).epsilon(1e-14));
}

TEST_CASE("rk4 reports divergence") {
    auto rhs = [](const std::vector<double>& y, double) { return std::vector<double>{y[0] * y[0]}; };
    CHECK_THROWS_AS(rk4_solve(rhs, {1.0}, 0.1, 50.0), OracleDivergence);
    CHECK_THROWS_AS(rk4_solve(rhs, {1.0}, 0.0, 1.0), DomainError);
}

TEST_CASE("closed forms") {
    CHECK(linear_relax(0.2, 0.1, 1.0, 0.0) == Approx(1.0));
    CHECK(linear_relax(0.2, 0.1, 1.0, 1e6) == Approx(2.0));
    CHECK(logistic(1.0, 2.0, 0.5, 0.0) == Approx(0.5));
    CHECK(logistic(1.0, 2.0, 0.5, 100.0) == Approx(2.0));
    CHECK(blow_up_square(1.0, 0.5) == Approx(2.0));
    CHECK_THROWS_AS(blow_up_square(1.0, 1.0), DomainError);

    auto rhs = [](const std::vector<double>& y, double) { return std::vector<double>{1.0 * y[0] * (1.0 - y[0] / 2.0)}; };
    CHECK(rk4_final(rhs, {0.5}, 1e-3, 3.0)[0] == Approx(logistic(1.0, 2.0, 0.5, 3.0)).epsilon(1e-12));
}
