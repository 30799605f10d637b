#include "doctest.h"
#include "helpers.hpp"
#include "pimaw/synthesis.hpp"

using namespace pimaw;

TEST_CASE("synthesize_K: first order needs k < 0") {
    auto model = companion_realization({1, 0});
    auto g = synthesize_K(model, 1, 10);
    CHECK(g.K(0) < 0.0);
    CHECK(g.hurwitz.pass);
}

TEST_CASE("synthesize_K: s^2 needs both entries negative") {
    auto model = companion_realization({1, 0, 0});
    auto g = synthesize_K(model, 1, 10);
    CHECK(g.K(0) < 0.0);
    CHECK(g.K(1) < 0.0);
    // 100 interior samples, Routh-Hurwitz oracle for s^2 - l k2 s - l k1.
    for (double l : interior_samples(1, 10, 100)) {
        CHECK(-l * g.K(1) > 0.0);
        CHECK(-l * g.K(0) > 0.0);
    }
}

TEST_CASE("synthesize_K: single vertex meets the decay rate") {
    auto model = companion_realization({1, 0, 0});
    auto g = synthesize_K(model, 1, 1);
    Eigen::EigenSolver<Mat> es(model.F + model.H_col * g.K, false);
    CHECK(es.eigenvalues().real().maxCoeff() <= -g.eps_decay);
}

TEST_CASE("synthesize_K: robust over 100 random lambdas, several models") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (const auto& p : std::vector<std::vector<double>>{{1, 0}, {1, 0, 0}, {1, 0, 0.0625, 0}, {1, 0, 0, 0}}) {
        auto model = companion_realization(p);
        auto g = synthesize_K(model, 0.5, 20);
        std::vector<double> lams;
        for (int k = 0; k < 100; ++k) lams.push_back(0.5 + 19.5 * U(rng));
        CHECK(verify_hurwitz(model, g.K, lams).pass);
    }
}

TEST_CASE("synthesize_K rejects bad ranges") {
    auto model = companion_realization({1, 0});
    CHECK_THROWS_AS(synthesize_K(model, 0, 1), InvalidInput);
    CHECK_THROWS_AS(synthesize_K(model, 2, 1), InvalidInput);
}

TEST_CASE("verify_hurwitz examples") {
    auto model = companion_realization({1, 0, 0});
    RowVec K(2);
    K << -1, -2;
    auto ok = verify_hurwitz(model, K, {1.0});
    CHECK(ok.pass);
    CHECK(ok.max_real[0] == doctest::Approx(-1.0).epsilon(1e-6));  // double root at -1
    K << 1, -2;
    CHECK_FALSE(verify_hurwitz(model, K, {1.0}).pass);
}

TEST_CASE("assemble_antiwindup_lmi: m = 1 symbolic form") {
    auto model = companion_realization({1, 0});
    const double k = -2.0, lam = 3.0, gam = 5.0, Q = 0.7, d = 0.4, xi = 1.1;
    const Mat M = assemble_antiwindup_lmi(model, RowVec::Constant(1, k), lam, gam, Mat::Constant(1, 1, Q), d, xi);
    Mat E(4, 4);
    E << 2 * Q * lam * k, (xi - d * lam) + Q * k, 1, Q * k * lam,  //
        0, -2 * d, 0, d * (1 - lam),                              //
        0, 0, -gam, 1,                                            //
        0, 0, 0, -gam;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < i; ++j) E(i, j) = E(j, i);
    CHECK((M - E).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("assemble_antiwindup_lmi: affine in variables and in lambda") {
    auto model = companion_realization({1, 0, 0.0625, 0});
    std::mt19937_64 rng(7);
    const RowVec K = testutil::uniform_vec(3, -3, -1, rng).transpose();
    const Mat Q = testutil::random_spd(3, 0.5, 2, rng);
    const double d = 0.3, xi = 0.9, gam = 4;
    const Mat M0 = assemble_antiwindup_lmi(model, K, 2.0, gam, Mat::Zero(3, 3), 0.0, 0.0);
    const Mat M1 = assemble_antiwindup_lmi(model, K, 2.0, gam, Q, d, xi) - M0;
    const Mat M2 = assemble_antiwindup_lmi(model, K, 2.0, gam, 2 * Q, 2 * d, 2 * xi) - M0;
    CHECK((M2 - 2 * M1).cwiseAbs().maxCoeff() < 1e-12);
    // The constant part holds only the (1,3), (3,3), (3,4), (4,4) blocks.
    CHECK(M0.topLeftCorner(3, 3).isZero(0.0));
    CHECK(M0(3, 3) == 0.0);

    const double lmin = 1, lmax = 10, t = 0.3, lmid = t * lmin + (1 - t) * lmax;
    const Mat A = assemble_antiwindup_lmi(model, K, lmin, gam, Q, d, xi);
    const Mat B = assemble_antiwindup_lmi(model, K, lmax, gam, Q, d, xi);
    const Mat C = assemble_antiwindup_lmi(model, K, lmid, gam, Q, d, xi);
    CHECK((C - (t * A + (1 - t) * B)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((C - C.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(assemble_antiwindup_lmi(model, K, 1, 1, Mat::Identity(2, 2), 1, 1), DimensionMismatch);
}

TEST_CASE("solve_antiwindup: ramp model at gamma 10 is certified") {
    auto model = companion_realization({1, 0, 0});
    auto g = synthesize_K(model, 1, 10);
    auto r = solve_antiwindup(model, g.K, 1, 10, 10);
    REQUIRE(r.design);
    const auto& d = *r.design;
    CHECK(d.cert.margin_lambda_min < -1e-9);
    CHECK(d.cert.margin_lambda_max < -1e-9);
    CHECK(d.cert.q_min_eig >= 1e-9);
    CHECK(d.delta >= 1e-9);
    // Independent eigenvalue oracle at the vertices and 50 interior samples.
    std::vector<double> lams{1.0, 10.0};
    for (double l : interior_samples(1, 10, 50)) lams.push_back(l);
    for (double l : lams) {
        const Mat M = assemble_antiwindup_lmi(model, g.K, l, 10, d.Qbar, d.delta, d.xi);
        Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().maxCoeff() < 0.0);
    }
    CHECK(d.rho == doctest::Approx(d.xi / d.delta));
    MESSAGE("ramp model, gamma 10: rho = " << d.rho);
}

TEST_CASE("solve_antiwindup: feasibility is monotone in gamma and deterministic") {
    auto model = companion_realization({1, 0});
    auto g = synthesize_K(model, 1, 10);
    auto a = solve_antiwindup(model, g.K, 1, 10, 10);
    auto b = solve_antiwindup(model, g.K, 1, 10, 20);
    REQUIRE(a.design);
    CHECK(b.design.has_value());
    auto c = solve_antiwindup(model, g.K, 1, 10, 10);
    REQUIRE(c.design);
    CHECK(a.design->rho == c.design->rho);
    CHECK((a.design->Qbar.array() == c.design->Qbar.array()).all());
}

TEST_CASE("solve_antiwindup: tiny gamma is infeasible with a margin report") {
    auto model = companion_realization({1, 0, 0});
    auto g = synthesize_K(model, 1, 10);
    auto r = solve_antiwindup(model, g.K, 1, 10, 1e-6);
    CHECK_FALSE(r.design.has_value());
    CHECK(r.status != lmi::Status::Feasible);
    CHECK(r.best_margin > 0.0);
}

TEST_CASE("minimize_gamma") {
    auto model = companion_realization({1, 0});
    auto g = synthesize_K(model, 1, 10);
    auto s = minimize_gamma(model, g.K, 1, 10, 50, 1e-3);
    CHECK(s.gamma_star <= 50);
    CHECK(s.gamma_star > 0);
    // Bisection saw a monotone oracle: every feasible probe is above every infeasible one.
    double max_infeasible = 0, min_feasible = 1e300;
    for (auto [gam, ok] : s.probes) {
        if (ok)
            min_feasible = std::min(min_feasible, gam);
        else
            max_infeasible = std::max(max_infeasible, gam);
    }
    CHECK(max_infeasible < min_feasible);
    CHECK(solve_antiwindup(model, g.K, 1, 10, 2 * s.gamma_star).design.has_value());
    CHECK_FALSE(solve_antiwindup(model, g.K, 1, 10, s.gamma_star * (1 - 2e-3)).design.has_value());
    CHECK_THROWS_AS(minimize_gamma(model, g.K, 1, 10, 1e-5), SynthesisInfeasible);
}
