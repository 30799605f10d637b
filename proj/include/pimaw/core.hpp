#pragma once

#include <complex>
#include <vector>

#include "pimaw/types.hpp"

namespace pimaw {

// Numerical tolerances shared by the core routines. Defaults are sized for
// double precision at n <= ~200.
struct CoreTolerances {
    double symmetry = 1e-12;        // relative max |A - A^T|
    double orthogonality = 1e-10;   // max |V^T V - I|
    double reconstruction = 1e-8;   // max |A - V L V^T|, relative to lambda_max
    double eig_bounds = 1e-9;       // relative slack on [lambda_min, lambda_max]
    double kink = 1e-12;            // distance to the projection kink set
    double root_cluster = 1e-3;     // relative radius for merging repeated roots
    double marginal_real = 1e-9;    // largest admissible Re(root) of d(s)
    int jacobi_max_sweeps = 100;
};

// ---------------------------------------------------------------------------
// Dense symmetric linear algebra
// ---------------------------------------------------------------------------

struct EigenDecomposition {
    Mat V;       // orthogonal, columns are eigenvectors
    Vec values;  // ascending
};

/// Max entry of |A - A^T| divided by max(1, max |A|).
double relative_asymmetry(const Mat& A);

/// Cyclic Jacobi eigendecomposition A = V diag(values) V^T.
///
/// Sweeps rotate (p, q) pairs in row-major order, so the output is a pure
/// function of the input. Eigenvalues are sorted ascending (stable on ties)
/// and every eigenvector is signed so its largest-magnitude entry is positive.
EigenDecomposition symmetric_eigendecomposition(const Mat& A, const CoreTolerances& tol = {});

/// Matrix whose transpose is its inverse, validated on construction.
class Orthogonal {
   public:
    static Orthogonal checked(Mat V, double tol = CoreTolerances{}.orthogonality);
    static Orthogonal identity(int n) { return Orthogonal(Mat::Identity(n, n)); }

    const Mat& matrix() const { return V_; }
    int size() const { return static_cast<int>(V_.rows()); }

   private:
    explicit Orthogonal(Mat V) : V_(std::move(V)) {}
    Mat V_;
};

// ---------------------------------------------------------------------------
// Problem data
// ---------------------------------------------------------------------------

/// Curvature data of f_t(x) = 1/2 x^T A x + b(t)^T x with known spectral
/// bounds lambda_min I <= A <= lambda_max I.
class QuadraticProblem {
   public:
    QuadraticProblem(Mat A, double lambda_min, double lambda_max, const CoreTolerances& tol = {});

    /// A = V diag(eigenvalues) V^T.
    static QuadraticProblem from_spectrum(const Mat& V, const Vec& eigenvalues, double lambda_min, double lambda_max,
                                          const CoreTolerances& tol = {});

    int n() const { return static_cast<int>(A_.rows()); }
    const Mat& A() const { return A_; }
    double lambda_min() const { return lambda_min_; }
    double lambda_max() const { return lambda_max_; }
    const EigenDecomposition& eig() const { return eig_; }
    const Orthogonal& V() const { return V_; }

   private:
    Mat A_;
    double lambda_min_;
    double lambda_max_;
    EigenDecomposition eig_;
    Orthogonal V_;
};

/// Roots of a real polynomial, with numerically repeated roots merged.
struct PolynomialRoot {
    std::complex<double> value;
    int multiplicity = 1;
};

/// Roots of the monic polynomial with descending coefficients
/// [1, a_{m-1}, ..., a_0]. Perturbed copies of a multiple root are replaced
/// by their centroid, which is accurate to O(eps) even though each copy is
/// only accurate to O(eps^(1/k)).
std::vector<PolynomialRoot> polynomial_roots(const std::vector<double>& coeffs, const CoreTolerances& tol = {});

/// Signal generator d(s) in controllable canonical form.
struct ExosystemModel {
    int m = 0;
    std::vector<double> d_coeffs;  // descending, monic, length m + 1
    Mat F;                         // m x m companion matrix
    Vec H_col;                     // controller input column, e_m
    RowVec H_row;                  // signal output row, e_1^T
    std::vector<PolynomialRoot> roots;

    /// Every root has Re < -marginal_real.
    bool strictly_stable(const CoreTolerances& tol = {}) const;
};

/// Controllable canonical realization of a monic d(s): superdiagonal ones,
/// last row the negated low-order coefficients. Rejects degree 0, non-monic
/// input, and any root with positive real part.
ExosystemModel companion_realization(const std::vector<double>& d_coeffs, const CoreTolerances& tol = {});

/// Coefficients of det(sI - F), descending, via Faddeev-LeVerrier.
std::vector<double> characteristic_polynomial(const Mat& F);

struct ExtendedRealization {
    int n = 0;
    int m = 0;
    Mat F_ext;  // I_n (x) F
    Mat H_ext;  // I_n (x) H_col
    Mat K_ext;  // I_n (x) K
};

Mat kron_identity(int n, const Mat& block);

ExtendedRealization kron_extend(const ExosystemModel& model, const RowVec& K, int n);

/// True iff every diagonal block equals the base block and every other entry
/// is exactly zero.
bool has_kron_identity_structure(const Mat& extended, const Mat& block, int n);

// ---------------------------------------------------------------------------
// Signals and the projection nonlinearity
// ---------------------------------------------------------------------------

/// Ax + b.
Vec gradient_oracle(const QuadraticProblem& prob, const Vec& b, const Vec& x);

/// Componentwise max(v_i, 0).
Vec project_nonneg(const Vec& v);

/// V^T proj(V u).
Vec phi(const Orthogonal& V, const Vec& u);

class KinkProximity : public std::domain_error {
   public:
    KinkProximity(const std::string& what, int index, double value)
        : std::domain_error(what), index_(index), value_(value) {}
    int index() const { return index_; }
    double value() const { return value_; }

   private:
    int index_;
    double value_;
};

/// Jacobian V^T X V of phi, X = diag(1[(V u)_i >= 0]). Throws KinkProximity
/// when some (V u)_i lies within tol of zero.
Mat phi_jacobian(const Orthogonal& V, const Vec& u, double tol = CoreTolerances{}.kink);

/// V^T s, the decoupled-coordinate version of x, b or w.
Vec transform_signals(const Orthogonal& V, const Vec& s);

}  // namespace pimaw
