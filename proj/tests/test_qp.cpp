#include "doctest.h"
#include "helpers.hpp"
#include "pimaw/qp.hpp"

using namespace pimaw;

namespace {

Vec V2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

}  // namespace

TEST_CASE("solve_nonneg_qp examples") {
    auto r = solve_nonneg_qp(Mat::Identity(2, 2), V2(-1, 1));
    CHECK((r.x_star - V2(1, 0)).norm() < 1e-12);
    CHECK((r.mu_star - V2(0, 1)).norm() < 1e-12);

    Mat A(2, 2);
    A << 2, 1, 1, 2;
    auto s = solve_nonneg_qp(A, V2(-3, 0));
    CHECK((s.x_star - V2(1.5, 0)).norm() < 1e-12);
    CHECK((s.mu_star - V2(0, 1.5)).norm() < 1e-12);

    std::mt19937_64 rng(1);
    const Mat B = testutil::random_spd(5, 1, 10, rng);
    const Vec b = testutil::uniform_vec(5, 0.1, 2, rng);
    auto z = solve_nonneg_qp(B, b);
    CHECK(z.x_star.isZero(0.0));
    CHECK((z.mu_star - b).norm() < 1e-12);
}

TEST_CASE("brute_force_qp examples") {
    auto a = brute_force_qp(Mat::Constant(1, 1, 2.0), Vec::Constant(1, -4.0));
    CHECK(a.x_star(0) == doctest::Approx(2.0));
    auto b = brute_force_qp(Mat::Constant(1, 1, 2.0), Vec::Constant(1, 4.0));
    CHECK(b.x_star(0) == 0.0);
    CHECK(b.mu_star(0) == doctest::Approx(4.0));
    CHECK_THROWS_AS(brute_force_qp(Mat::Identity(16, 16), Vec::Zero(16)), InvalidInput);
}

TEST_CASE("non-SPD input is rejected") {
    Mat A(2, 2);
    A << 1, 2, 2, 1;
    CHECK_THROWS_AS(solve_nonneg_qp(A, V2(1, 1)), InvalidInput);
    CHECK_THROWS_AS(solve_nonneg_qp(Mat::Identity(2, 2), Vec::Zero(3)), InvalidInput);
}

TEST_CASE("kkt_residual examples") {
    Mat A = Mat::Identity(2, 2);
    auto opt = solve_nonneg_qp(A, V2(-1, 1));
    CHECK(kkt_residual(A, V2(-1, 1), opt.x_star, opt.mu_star).max() <= 1e-9);
    auto neg = kkt_residual(A, V2(0, 0), V2(-0.5, 0.2), V2(-0.5, 0.2));
    CHECK(neg.primal == doctest::Approx(0.5));
    auto dual = kkt_residual(A, V2(-2, 1), V2(0, 0), V2(-2, 1));
    CHECK(dual.dual == doctest::Approx(2.0));
}

TEST_CASE("active-set solver agrees with enumeration and satisfies KKT") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> dim(1, 10);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = dim(rng);
        const Mat A = testutil::random_spd(n, 0.2, 10, rng);
        const Vec b = testutil::uniform_vec(n, -3, 3, rng);
        const auto r = solve_nonneg_qp(A, b);
        const auto o = brute_force_qp(A, b);
        REQUIRE((r.x_star - o.x_star).cwiseAbs().maxCoeff() <= 1e-8);
        REQUIRE((r.mu_star - o.mu_star).cwiseAbs().maxCoeff() <= 1e-8);
        REQUIRE(r.residuals.max() <= 1e-9 * (1 + b.norm()));
        for (int i = 0; i < n; ++i) REQUIRE(std::min(r.x_star(i), r.mu_star(i)) <= 1e-9);
    }
}

TEST_CASE("adding a constant to the cost does not move x*") {
    // The solver only sees (A, b); the constant never enters, so this is the
    // statement that the minimizer of f and f + c coincide for the oracle.
    std::mt19937_64 rng(5);
    const Mat A = testutil::random_spd(4, 1, 5, rng);
    const Vec b = testutil::uniform_vec(4, -1, 1, rng);
    const auto r = solve_nonneg_qp(A, b);
    auto f = [&](const Vec& x, double c) { return 0.5 * x.dot(A * x) + b.dot(x) + c; };
    for (int k = 0; k < 100; ++k) {
        const Vec y = testutil::uniform_vec(4, 0, 2, rng);
        CHECK(f(r.x_star, 3.7) <= f(y, 3.7) + 1e-12);
    }
}
