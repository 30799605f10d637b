#pragma once

#include <random>

#include "pimaw/core.hpp"

namespace testutil {

using pimaw::Mat;
using pimaw::Vec;

inline Mat haar_orthogonal(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> N(0.0, 1.0);
    Mat G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G(i, j) = N(rng);
    Eigen::HouseholderQR<Mat> qr(G);
    Mat Q = qr.householderQ();
    for (int j = 0; j < n; ++j)
        if (qr.matrixQR()(j, j) < 0) Q.col(j) *= -1.0;
    return Q;
}

inline Vec uniform_vec(int n, double lo, double hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(lo, hi);
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = U(rng);
    return v;
}

// A = V diag(l) V^T with l uniform in [lo, hi].
inline Mat random_spd(int n, double lo, double hi, std::mt19937_64& rng) {
    const Mat V = haar_orthogonal(n, rng);
    const Vec l = uniform_vec(n, lo, hi, rng);
    Mat A = V * l.asDiagonal() * V.transpose();
    return 0.5 * (A + A.transpose());
}

inline Mat random_symmetric(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> N(0.0, 1.0);
    Mat G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G(i, j) = N(rng);
    return 0.5 * (G + G.transpose());
}

}  // namespace testutil
