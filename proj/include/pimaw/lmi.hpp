#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pimaw/types.hpp"

namespace pimaw::lmi {

enum class VariableKind { Scalar, Symmetric };

struct Variable {
    std::string name;
    VariableKind kind = VariableKind::Scalar;
    int dim = 1;          // 1 for scalars, m for symmetric(m)
    int offset = 0;       // first coordinate in the flat decision vector
    double bound = 1e3;   // box |coordinate| < bound keeps the feasible set compact

    int coordinates() const { return kind == VariableKind::Scalar ? 1 : dim * (dim + 1) / 2; }
};

struct VarRef {
    int index = -1;
};

/// A value for every decision variable, stored as the flat coordinate vector.
/// Symmetric variables use their upper triangle in column-major order.
class Point {
   public:
    Point() = default;
    Point(const std::vector<Variable>* vars, Vec coords) : vars_(vars), coords_(std::move(coords)) {}

    double scalar(VarRef v) const;
    Mat symmetric(VarRef v) const;
    const Vec& coordinates() const { return coords_; }

   private:
    const std::vector<Variable>* vars_ = nullptr;
    Vec coords_;
};

/// M(v) = constant + sum_j v_j * coefficients[j], demanded negative definite.
struct AffineConstraint {
    std::string name;
    int size = 0;
    Mat constant;
    std::vector<Mat> coefficients;  // one per flat coordinate
};

/// Affine matrix inequalities M_k(v) < 0 in scalar and symmetric-matrix
/// decision variables.
class LmiSystem {
   public:
    VarRef add_scalar(std::string name, double bound = 1e3);
    VarRef add_symmetric(std::string name, int dim, double bound = 1e3);

    /// Adds M(v) < 0 where `expr` is affine in the point. Constant and
    /// coefficient blocks are extracted by evaluation at the origin and unit
    /// coordinates; affinity is then checked at a fixed off-axis probe point.
    void add_constraint(std::string name, const std::function<Mat(const Point&)>& expr);

    /// Adds an already-assembled constraint.
    void add_constraint(AffineConstraint c);

    int num_coordinates() const;
    const std::vector<Variable>& variables() const { return vars_; }
    const std::vector<AffineConstraint>& constraints() const { return cons_; }

    Point point(Vec coords) const { return Point(&vars_, std::move(coords)); }
    Mat evaluate(int k, const Vec& coords) const;

    /// Throws InvalidInput on non-square or asymmetric blocks, size mismatch,
    /// or non-positive bounds.
    void validate() const;

   private:
    std::vector<Variable> vars_;
    std::vector<AffineConstraint> cons_;
};

struct SolverConfig {
    int max_iter = 500;        // total Newton steps across both phases
    double tol_feas = 1e-9;    // required margin: every max eigenvalue < -tol_feas
    unsigned long long seed = 0;  // reserved; the method itself is deterministic
    double gap_tol = 1e-10;
};

enum class Status { Feasible, Infeasible, Stalled };

struct Certificate {
    Status status = Status::Stalled;
    Vec point;                  // flat coordinates
    std::vector<double> margins;  // max eigenvalue of each constraint at `point`
    double best_margin = 0.0;   // max over margins (Feasible: < -tol_feas)
    int iterations = 0;
    std::vector<double> trace;  // phase-1 shift after each outer step
};

/// Log-det barrier feasibility solve.
///
/// Phase 1 minimizes a common shift t with M_k(v) < t I (plus the coordinate
/// box) along the barrier central path, starting from v = 0. As soon as t is
/// below -10 tol_feas the point is strictly feasible and phase 2 moves it to
/// the analytic center of {M_k(v) < 0} within the box. When phase 1 converges
/// with t >= -tol_feas the system is reported Infeasible with that t.
/// Margins in the returned certificate are recomputed by a dense eigensolver
/// on the assembled constraints, independent of the barrier iterates.
Certificate solve_feasibility(const LmiSystem& sys, const SolverConfig& config = {});

/// Largest eigenvalue of a symmetric matrix (rejects relative asymmetry > 1e-12).
double eig_max_symmetric(const Mat& M);

const char* to_string(Status s);

}  // namespace pimaw::lmi
