#include "pimaw/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace pimaw {

double KktResidual::max() const { return std::max({stationarity, primal, dual, complementarity}); }

KktResidual kkt_residual(const Mat& A, const Vec& b, const Vec& x, const Vec& mu) {
    require_dims(A.rows() == A.cols() && A.rows() == b.size() && b.size() == x.size() && x.size() == mu.size(),
                 "kkt_residual: dimension mismatch");
    KktResidual r;
    if (x.size() == 0) return r;
    r.stationarity = (A * x + b - mu).cwiseAbs().maxCoeff();
    r.primal = std::max(0.0, -x.minCoeff());
    r.dual = std::max(0.0, -mu.minCoeff());
    r.complementarity = mu.cwiseProduct(x).cwiseAbs().maxCoeff();
    return r;
}

namespace {

void check_spd(const Mat& A, const Vec& b, const char* who) {
    require_dims(A.rows() == A.cols() && A.rows() == b.size(), std::string(who) + ": dimension mismatch");
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw InvalidInput(std::string(who) + ": A is not symmetric");
    Eigen::LLT<Mat> llt(A);
    if (llt.info() != Eigen::Success) throw InvalidInput(std::string(who) + ": A is not positive definite");
}

Vec solve_on(const Mat& A, const Vec& b, const std::vector<int>& free_set) {
    const int n = static_cast<int>(b.size());
    const int k = static_cast<int>(free_set.size());
    Vec x = Vec::Zero(n);
    if (k == 0) return x;
    Mat Af(k, k);
    Vec bf(k);
    for (int i = 0; i < k; ++i) {
        bf(i) = b(free_set[static_cast<size_t>(i)]);
        for (int j = 0; j < k; ++j) Af(i, j) = A(free_set[static_cast<size_t>(i)], free_set[static_cast<size_t>(j)]);
    }
    const Vec xf = Af.llt().solve(-bf);
    for (int i = 0; i < k; ++i) x(free_set[static_cast<size_t>(i)]) = xf(i);
    return x;
}

KktPoint finish(const Mat& A, const Vec& b, Vec x) {
    KktPoint p;
    p.x_star = std::move(x);
    p.mu_star = A * p.x_star + b;
    // Free coordinates carry a zero multiplier; clean the rounding residue.
    for (Eigen::Index i = 0; i < p.x_star.size(); ++i)
        if (p.x_star(i) > 0.0) p.mu_star(i) = 0.0;
    p.residuals = kkt_residual(A, b, p.x_star, p.mu_star);
    return p;
}

}  // namespace

KktPoint solve_nonneg_qp(const Mat& A, const Vec& b, double tol) {
    check_spd(A, b, "solve_nonneg_qp");
    const int n = static_cast<int>(b.size());
    const double scale = tol * (1.0 + b.cwiseAbs().maxCoeff());

    std::vector<bool> is_free(static_cast<size_t>(n), false);
    Vec x = Vec::Zero(n);
    const int max_outer = 10 * n + 10;
    for (int outer = 0; outer < max_outer; ++outer) {
        const Vec grad = A * x + b;
        int enter = -1;
        double most = -scale;
        for (int i = 0; i < n; ++i) {
            if (!is_free[static_cast<size_t>(i)] && grad(i) < most) {
                most = grad(i);
                enter = i;
            }
        }
        if (enter < 0) return finish(A, b, x);
        is_free[static_cast<size_t>(enter)] = true;

        for (int inner = 0; inner <= n; ++inner) {
            std::vector<int> F;
            for (int i = 0; i < n; ++i)
                if (is_free[static_cast<size_t>(i)]) F.push_back(i);
            const Vec s = solve_on(A, b, F);
            bool inside = true;
            for (int i : F) inside = inside && s(i) > 0.0;
            if (inside) {
                x = s;
                break;
            }
            // Step from x toward s until the first free coordinate hits zero.
            double alpha = 1.0;
            for (int i : F) {
                if (s(i) <= 0.0) {
                    const double denom = x(i) - s(i);
                    const double a = denom > 0.0 ? x(i) / denom : 0.0;
                    alpha = std::min(alpha, a);
                }
            }
            x += alpha * (s - x);
            for (int i : F) {
                if (x(i) <= scale * 1e-3 || (s(i) <= 0.0 && x(i) <= 0.0)) {
                    x(i) = 0.0;
                    is_free[static_cast<size_t>(i)] = false;
                }
            }
        }
    }
    throw NotConverged("solve_nonneg_qp: active-set iteration cap reached", kkt_residual(A, b, x, A * x + b).max());
}

KktPoint brute_force_qp(const Mat& A, const Vec& b) {
    check_spd(A, b, "brute_force_qp");
    const int n = static_cast<int>(b.size());
    if (n > 15) throw InvalidInput("brute_force_qp: n must be at most 15");
    const double tol = 1e-9 * (1.0 + b.cwiseAbs().maxCoeff());

    KktPoint best;
    double best_res = std::numeric_limits<double>::infinity();
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        std::vector<int> F;
        for (int i = 0; i < n; ++i)
            if (mask & (1u << i)) F.push_back(i);
        Vec x = solve_on(A, b, F);
        if (x.size() > 0 && x.minCoeff() < -tol) continue;
        x = x.cwiseMax(0.0);
        Vec mu = A * x + b;
        for (int i : F) mu(i) = 0.0;
        const double r = kkt_residual(A, b, x, mu).max();
        if (r < best_res) {
            best_res = r;
            best.x_star = x;
            best.mu_star = mu;
            best.residuals = kkt_residual(A, b, x, mu);
        }
    }
    return best;
}

}  // namespace pimaw
