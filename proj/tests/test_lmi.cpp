#include "doctest.h"
#include "helpers.hpp"
#include "pimaw/lmi.hpp"

using namespace pimaw;
using namespace pimaw::lmi;

namespace {

// Random system with a known strictly feasible point v0: M_k(v0) = -S_k.
LmiSystem planted_system(std::mt19937_64& rng, int nvars, int ncons, int size) {
    LmiSystem sys;
    for (int j = 0; j < nvars; ++j) sys.add_scalar("v" + std::to_string(j), 10.0);
    const Vec v0 = testutil::uniform_vec(nvars, -1, 1, rng);
    for (int k = 0; k < ncons; ++k) {
        AffineConstraint c;
        c.name = "c" + std::to_string(k);
        c.size = size;
        Mat lin = Mat::Zero(size, size);
        for (int j = 0; j < nvars; ++j) {
            c.coefficients.push_back(testutil::random_symmetric(size, rng));
            lin += v0(j) * c.coefficients.back();
        }
        const Mat S = testutil::random_spd(size, 0.05, 1.0, rng);
        c.constant = -lin - S;
        sys.add_constraint(c);
    }
    return sys;
}

double replay_margin(const LmiSystem& sys, const Vec& v) {
    double worst = -1e300;
    for (const auto& c : sys.constraints()) {
        Mat M = c.constant;
        for (size_t j = 0; j < c.coefficients.size(); ++j) M += v(static_cast<Eigen::Index>(j)) * c.coefficients[j];
        Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
        worst = std::max(worst, es.eigenvalues().maxCoeff());
    }
    return worst;
}

}  // namespace

TEST_CASE("eig_max_symmetric examples") {
    Mat d = Mat::Zero(2, 2);
    d(0, 0) = -3;
    d(1, 1) = -1;
    CHECK(eig_max_symmetric(d) == doctest::Approx(-1.0));
    CHECK(eig_max_symmetric(Mat::Identity(4, 4)) == doctest::Approx(1.0));
    std::mt19937_64 rng(1);
    for (int k = 0; k < 50; ++k) {
        const Mat S = testutil::random_symmetric(8, rng);
        const double ref = symmetric_eigendecomposition(S).values.maxCoeff();
        CHECK(std::abs(eig_max_symmetric(S) - ref) <= 1e-10 * std::max(1.0, std::abs(ref)));
    }
    Mat bad = Mat::Identity(3, 3);
    bad(0, 2) = 1e-6;
    CHECK_THROWS_AS(eig_max_symmetric(bad), InvalidInput);
}

TEST_CASE("scalar x < 0 is feasible") {
    LmiSystem sys;
    const auto x = sys.add_scalar("x");
    sys.add_constraint("x<0", [=](const Point& p) { return Mat::Constant(1, 1, p.scalar(x)); });
    const auto cert = solve_feasibility(sys);
    REQUIRE(cert.status == Status::Feasible);
    CHECK(cert.point(0) < 0.0);
    CHECK(cert.best_margin < -1e-9);
}

TEST_CASE("x < -1 and x > 1 is infeasible") {
    LmiSystem sys;
    const auto x = sys.add_scalar("x");
    sys.add_constraint("x<-1", [=](const Point& p) { return Mat::Constant(1, 1, p.scalar(x) + 1.0); });
    sys.add_constraint("x>1", [=](const Point& p) { return Mat::Constant(1, 1, 1.0 - p.scalar(x)); });
    const auto cert = solve_feasibility(sys);
    CHECK(cert.status == Status::Infeasible);
    CHECK(cert.best_margin >= 0.9);  // the best common shift is 1
}

TEST_CASE("symmetric variable: X > I and X < 3 I") {
    LmiSystem sys;
    const auto X = sys.add_symmetric("X", 3, 10.0);
    sys.add_constraint("X>I", [=](const Point& p) { return Mat(Mat::Identity(3, 3) - p.symmetric(X)); });
    sys.add_constraint("X<3I", [=](const Point& p) { return Mat(p.symmetric(X) - 3.0 * Mat::Identity(3, 3)); });
    const auto cert = solve_feasibility(sys);
    REQUIRE(cert.status == Status::Feasible);
    const Mat Xv = sys.point(cert.point).symmetric(X);
    Eigen::SelfAdjointEigenSolver<Mat> es(Xv);
    CHECK(es.eigenvalues().minCoeff() > 1.0);
    CHECK(es.eigenvalues().maxCoeff() < 3.0);
}

TEST_CASE("non-affine expressions and malformed constraints are rejected") {
    LmiSystem sys;
    const auto x = sys.add_scalar("x");
    CHECK_THROWS_AS(
        sys.add_constraint("sq", [=](const Point& p) { return Mat::Constant(1, 1, p.scalar(x) * p.scalar(x)); }),
        InvalidInput);
    AffineConstraint c;
    c.name = "asym";
    c.size = 2;
    c.constant = Mat::Zero(2, 2);
    c.constant(0, 1) = 1.0;
    c.coefficients = {Mat::Identity(2, 2)};
    CHECK_THROWS_AS(sys.add_constraint(c), InvalidInput);
}

TEST_CASE("certificate soundness on planted feasible systems") {
    std::mt19937_64 rng(17);
    int feasible = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const auto sys = planted_system(rng, 1 + trial % 6, 1 + trial % 3, 2 + trial % 4);
        const auto cert = solve_feasibility(sys);
        if (cert.status != Status::Feasible) continue;
        ++feasible;
        // Independent replay: assembled blocks plus a separate eigensolver.
        REQUIRE(replay_margin(sys, cert.point) < -1e-9);
        for (size_t k = 0; k < cert.margins.size(); ++k) REQUIRE(cert.margins[k] < -1e-9);
    }
    // Every planted system has a strictly feasible point inside the box.
    CHECK(feasible == 60);
}

TEST_CASE("scale equivariance") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        const auto sys = planted_system(rng, 3, 2, 3);
        LmiSystem scaled;
        for (const auto& v : sys.variables()) scaled.add_scalar(v.name, v.bound);
        const double s = 7.5;
        for (auto c : sys.constraints()) {
            c.constant *= s;
            for (auto& m : c.coefficients) m *= s;
            scaled.add_constraint(c);
        }
        const auto a = solve_feasibility(sys);
        const auto b = solve_feasibility(scaled);
        REQUIRE(a.status == b.status);
        REQUIRE(a.status == Status::Feasible);
        for (size_t k = 0; k < a.margins.size(); ++k)
            CHECK(b.margins[k] == doctest::Approx(s * a.margins[k]).epsilon(1e-6));
    }
}

TEST_CASE("determinism") {
    std::mt19937_64 rng(29);
    const auto sys = planted_system(rng, 4, 2, 3);
    const auto a = solve_feasibility(sys);
    const auto b = solve_feasibility(sys);
    CHECK((a.point.array() == b.point.array()).all());
    CHECK(a.margins == b.margins);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("iteration cap reports Stalled") {
    // Thin slab far from the starting point; one Newton step cannot reach it.
    LmiSystem sys;
    const auto x = sys.add_scalar("x", 1000.0);
    sys.add_constraint("x>500", [=](const Point& p) { return Mat::Constant(1, 1, 500.0 - p.scalar(x)); });
    sys.add_constraint("x<500.5", [=](const Point& p) { return Mat::Constant(1, 1, p.scalar(x) - 500.5); });
    SolverConfig cfg;
    cfg.max_iter = 1;
    CHECK(solve_feasibility(sys, cfg).status == Status::Stalled);
    CHECK(solve_feasibility(sys).status == Status::Feasible);
}
