#include "pimaw/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace pimaw {

double relative_asymmetry(const Mat& A) {
    if (A.size() == 0) return 0.0;
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    return (A - A.transpose()).cwiseAbs().maxCoeff() / scale;
}

namespace {

double off_diagonal_norm2(const Mat& A) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < A.cols(); ++j)
        for (Eigen::Index i = 0; i < A.rows(); ++i)
            if (i != j) s += A(i, j) * A(i, j);
    return s;
}

}  // namespace

EigenDecomposition symmetric_eigendecomposition(const Mat& A, const CoreTolerances& tol) {
    require_dims(A.rows() == A.cols(), "symmetric_eigendecomposition: matrix is not square");
    const double asym = relative_asymmetry(A);
    if (asym > tol.symmetry) {
        std::ostringstream os;
        os << "symmetric_eigendecomposition: relative asymmetry " << asym << " exceeds " << tol.symmetry;
        throw AsymmetricMatrix(os.str(), asym);
    }

    const Eigen::Index n = A.rows();
    Mat S = 0.5 * (A + A.transpose());
    Mat V = Mat::Identity(n, n);
    const double scale2 = std::max(S.squaredNorm(), std::numeric_limits<double>::min());
    const double target = 1e-28 * scale2;

    int sweep = 0;
    for (; sweep < tol.jacobi_max_sweeps; ++sweep) {
        if (off_diagonal_norm2(S) <= target) break;
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = S(p, q);
                if (apq == 0.0) continue;
                const double app = S(p, p);
                const double aqq = S(q, q);
                // Skip rotations that would be lost in rounding anyway.
                if (std::abs(apq) <= 1e-300 ||
                    (sweep > 3 && std::abs(apq) * 1e17 < std::abs(app) && std::abs(apq) * 1e17 < std::abs(aqq))) {
                    S(p, q) = S(q, p) = 0.0;
                    continue;
                }
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double skp = S(k, p);
                    const double skq = S(k, q);
                    S(k, p) = c * skp - s * skq;
                    S(k, q) = s * skp + c * skq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double spk = S(p, k);
                    const double sqk = S(q, k);
                    S(p, k) = c * spk - s * sqk;
                    S(q, k) = s * spk + c * sqk;
                }
                S(p, q) = S(q, p) = 0.0;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = V(k, p);
                    const double vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    const double residual = std::sqrt(off_diagonal_norm2(S));
    if (off_diagonal_norm2(S) > target) {
        std::ostringstream os;
        os << "symmetric_eigendecomposition: no convergence after " << tol.jacobi_max_sweeps
           << " sweeps, off-diagonal norm " << residual;
        throw NotConverged(os.str(), residual);
    }

    std::vector<Eigen::Index> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return S(a, a) < S(b, b); });

    EigenDecomposition out{Mat(n, n), Vec(n)};
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::Index src = order[static_cast<size_t>(j)];
        out.values(j) = S(src, src);
        Vec col = V.col(src);
        Eigen::Index imax = 0;
        for (Eigen::Index i = 1; i < n; ++i)
            if (std::abs(col(i)) > std::abs(col(imax)) + 1e-14) imax = i;
        if (col(imax) < 0.0) col = -col;
        out.V.col(j) = col;
    }
    return out;
}

Orthogonal Orthogonal::checked(Mat V, double tol) {
    require_dims(V.rows() == V.cols(), "Orthogonal: matrix is not square");
    const Eigen::Index n = V.rows();
    const double dev = n == 0 ? 0.0 : (V.transpose() * V - Mat::Identity(n, n)).cwiseAbs().maxCoeff();
    if (!(dev <= tol)) {
        std::ostringstream os;
        os << "Orthogonal: max |V^T V - I| = " << dev << " exceeds " << tol;
        throw NotOrthogonal(os.str(), dev);
    }
    return Orthogonal(std::move(V));
}

QuadraticProblem::QuadraticProblem(Mat A, double lambda_min, double lambda_max, const CoreTolerances& tol)
    : A_(std::move(A)), lambda_min_(lambda_min), lambda_max_(lambda_max), V_(Orthogonal::identity(0)) {
    require_dims(A_.rows() == A_.cols() && A_.rows() > 0, "QuadraticProblem: A must be a non-empty square matrix");
    if (!(lambda_min > 0.0) || !(lambda_min <= lambda_max) || !std::isfinite(lambda_max))
        throw InvalidInput("QuadraticProblem: need 0 < lambda_min <= lambda_max < inf");
    eig_ = symmetric_eigendecomposition(A_, tol);
    A_ = 0.5 * (A_ + A_.transpose()).eval();

    const double slack = tol.eig_bounds * lambda_max;
    if (eig_.values(0) < lambda_min - slack || eig_.values(eig_.values.size() - 1) > lambda_max + slack) {
        std::ostringstream os;
        os << "QuadraticProblem: spectrum [" << eig_.values(0) << ", " << eig_.values(eig_.values.size() - 1)
           << "] outside declared bounds [" << lambda_min << ", " << lambda_max << "]";
        throw InvalidInput(os.str());
    }
    V_ = Orthogonal::checked(eig_.V, tol.orthogonality);
    const double recon = (A_ - eig_.V * eig_.values.asDiagonal() * eig_.V.transpose()).cwiseAbs().maxCoeff();
    if (recon > tol.reconstruction * lambda_max)
        throw NotConverged("QuadraticProblem: eigendecomposition reconstruction residual too large", recon);
}

QuadraticProblem QuadraticProblem::from_spectrum(const Mat& V, const Vec& eigenvalues, double lambda_min,
                                                 double lambda_max, const CoreTolerances& tol) {
    require_dims(V.rows() == V.cols() && V.rows() == eigenvalues.size(), "from_spectrum: size mismatch");
    const Orthogonal Vo = Orthogonal::checked(V, tol.orthogonality);
    Mat A = Vo.matrix() * eigenvalues.asDiagonal() * Vo.matrix().transpose();
    A = 0.5 * (A + A.transpose()).eval();
    return QuadraticProblem(std::move(A), lambda_min, lambda_max, tol);
}

std::vector<PolynomialRoot> polynomial_roots(const std::vector<double>& coeffs, const CoreTolerances& tol) {
    if (coeffs.size() < 2) throw InvalidInput("polynomial_roots: degree must be at least 1");
    if (coeffs.front() != 1.0) throw InvalidInput("polynomial_roots: polynomial must be monic");
    const int m = static_cast<int>(coeffs.size()) - 1;
    Mat C = Mat::Zero(m, m);
    for (int i = 0; i + 1 < m; ++i) C(i, i + 1) = 1.0;
    for (int j = 0; j < m; ++j) C(m - 1, j) = -coeffs[static_cast<size_t>(m - j)];

    Eigen::EigenSolver<Mat> es(C, false);
    std::vector<std::complex<double>> raw(es.eigenvalues().data(), es.eigenvalues().data() + m);
    double scale = 1.0;
    for (const auto& r : raw) scale = std::max(scale, std::abs(r));
    const double radius = tol.root_cluster * scale;

    // Single-linkage clustering in a deterministic order.
    std::stable_sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    std::vector<int> label(raw.size(), -1);
    int next = 0;
    for (size_t i = 0; i < raw.size(); ++i) {
        if (label[i] >= 0) continue;
        label[i] = next;
        std::vector<size_t> stack{i};
        while (!stack.empty()) {
            const size_t k = stack.back();
            stack.pop_back();
            for (size_t j = 0; j < raw.size(); ++j) {
                if (label[j] < 0 && std::abs(raw[j] - raw[k]) <= radius) {
                    label[j] = next;
                    stack.push_back(j);
                }
            }
        }
        ++next;
    }
    std::vector<PolynomialRoot> out(static_cast<size_t>(next), PolynomialRoot{{0.0, 0.0}, 0});
    for (size_t i = 0; i < raw.size(); ++i) {
        auto& r = out[static_cast<size_t>(label[i])];
        r.value += raw[i];
        r.multiplicity += 1;
    }
    for (auto& r : out) {
        r.value /= static_cast<double>(r.multiplicity);
        if (std::abs(r.value.imag()) <= radius) r.value.imag(0.0);
        if (std::abs(r.value.real()) <= 1e-12 * scale) r.value.real(0.0);
    }
    return out;
}

bool ExosystemModel::strictly_stable(const CoreTolerances& tol) const {
    return std::all_of(roots.begin(), roots.end(), [&](const auto& r) { return r.value.real() < -tol.marginal_real; });
}

ExosystemModel companion_realization(const std::vector<double>& d_coeffs, const CoreTolerances& tol) {
    if (d_coeffs.size() < 2) throw InvalidInput("companion_realization: degree must be at least 1");
    if (d_coeffs.front() != 1.0) throw InvalidInput("companion_realization: d(s) must be monic");
    for (double c : d_coeffs)
        if (!std::isfinite(c)) throw InvalidInput("companion_realization: non-finite coefficient");

    ExosystemModel model;
    model.m = static_cast<int>(d_coeffs.size()) - 1;
    model.d_coeffs = d_coeffs;
    const int m = model.m;
    model.F = Mat::Zero(m, m);
    for (int i = 0; i + 1 < m; ++i) model.F(i, i + 1) = 1.0;
    for (int j = 0; j < m; ++j) model.F(m - 1, j) = -d_coeffs[static_cast<size_t>(m - j)];
    model.H_col = Vec::Unit(m, m - 1);
    model.H_row = RowVec::Unit(m, 0);
    model.roots = polynomial_roots(d_coeffs, tol);
    for (const auto& r : model.roots) {
        if (r.value.real() > tol.marginal_real) {
            std::ostringstream os;
            os << "companion_realization: root " << r.value << " is unstable";
            throw InvalidInput(os.str());
        }
    }
    return model;
}

std::vector<double> characteristic_polynomial(const Mat& F) {
    require_dims(F.rows() == F.cols(), "characteristic_polynomial: matrix is not square");
    const Eigen::Index m = F.rows();
    std::vector<double> c(static_cast<size_t>(m + 1), 0.0);
    c[0] = 1.0;
    Mat M = Mat::Zero(m, m);
    const Mat I = Mat::Identity(m, m);
    for (Eigen::Index k = 1; k <= m; ++k) {
        M = F * M + c[static_cast<size_t>(k - 1)] * I;
        c[static_cast<size_t>(k)] = -(F * M).trace() / static_cast<double>(k);
    }
    return c;
}

Mat kron_identity(int n, const Mat& block) {
    const Eigen::Index r = block.rows();
    const Eigen::Index c = block.cols();
    Mat out = Mat::Zero(n * r, n * c);
    for (int i = 0; i < n; ++i) out.block(i * r, i * c, r, c) = block;
    return out;
}

ExtendedRealization kron_extend(const ExosystemModel& model, const RowVec& K, int n) {
    require_dims(n >= 1, "kron_extend: n must be positive");
    require_dims(model.F.rows() == model.m && model.H_col.size() == model.m, "kron_extend: malformed model");
    require_dims(K.size() == model.m, "kron_extend: K must have m entries");
    ExtendedRealization ext;
    ext.n = n;
    ext.m = model.m;
    ext.F_ext = kron_identity(n, model.F);
    ext.H_ext = kron_identity(n, Mat(model.H_col));
    ext.K_ext = kron_identity(n, Mat(K));
    return ext;
}

bool has_kron_identity_structure(const Mat& extended, const Mat& block, int n) {
    const Eigen::Index r = block.rows();
    const Eigen::Index c = block.cols();
    if (extended.rows() != n * r || extended.cols() != n * c) return false;
    for (int bi = 0; bi < n; ++bi) {
        for (int bj = 0; bj < n; ++bj) {
            const auto blk = extended.block(bi * r, bj * c, r, c);
            if (bi == bj) {
                if (blk != block) return false;
            } else if (!(blk.array() == 0.0).all()) {
                return false;
            }
        }
    }
    return true;
}

Vec gradient_oracle(const QuadraticProblem& prob, const Vec& b, const Vec& x) {
    require_dims(b.size() == prob.n() && x.size() == prob.n(), "gradient_oracle: dimension mismatch");
    return prob.A() * x + b;
}

Vec project_nonneg(const Vec& v) { return v.cwiseMax(0.0); }

Vec phi(const Orthogonal& V, const Vec& u) {
    require_dims(u.size() == V.size(), "phi: dimension mismatch");
    return V.matrix().transpose() * project_nonneg(V.matrix() * u);
}

Mat phi_jacobian(const Orthogonal& V, const Vec& u, double tol) {
    require_dims(u.size() == V.size(), "phi_jacobian: dimension mismatch");
    const Vec v = V.matrix() * u;
    Vec active(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) <= tol) {
            std::ostringstream os;
            os << "phi_jacobian: (V u)_" << i << " = " << v(i) << " lies on the projection kink";
            throw KinkProximity(os.str(), static_cast<int>(i), v(i));
        }
        active(i) = v(i) >= 0.0 ? 1.0 : 0.0;
    }
    return V.matrix().transpose() * active.asDiagonal() * V.matrix();
}

Vec transform_signals(const Orthogonal& V, const Vec& s) {
    require_dims(s.size() == V.size(), "transform_signals: dimension mismatch");
    return V.matrix().transpose() * s;
}

}  // namespace pimaw
