#pragma once

#include "pimaw/types.hpp"

namespace pimaw {

struct KktResidual {
    double stationarity = 0.0;     // max |A x + b - mu|
    double primal = 0.0;           // max(0, -min x)
    double dual = 0.0;             // max(0, -min mu)
    double complementarity = 0.0;  // max |mu_i x_i|

    double max() const;
};

/// KKT point of min 1/2 x^T A x + b^T x subject to x >= 0.
struct KktPoint {
    Vec x_star;
    Vec mu_star;  // = A x* + b
    KktResidual residuals;
};

KktResidual kkt_residual(const Mat& A, const Vec& b, const Vec& x, const Vec& mu);

/// Active-set solve for the nonnegative QP with SPD A. Lawson-Hanson style:
/// free the coordinate with the most negative gradient, re-solve on the free
/// set, and step back to the boundary whenever the reduced solution leaves
/// the orthant. Ties resolve to the lowest index. Rejects non-SPD A.
KktPoint solve_nonneg_qp(const Mat& A, const Vec& b, double tol = 1e-10);

/// Enumerates all 2^n free sets and returns the KKT-consistent candidate with
/// the smallest residual. n <= 15.
KktPoint brute_force_qp(const Mat& A, const Vec& b);

}  // namespace pimaw
