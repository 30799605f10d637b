#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pimaw/core.hpp"
#include "pimaw/qp.hpp"
#include "pimaw/signals.hpp"
#include "pimaw/synthesis.hpp"

namespace pimaw {

// ---------------------------------------------------------------------------
// Fixed-step integration
// ---------------------------------------------------------------------------

using VectorField = std::function<Vec(double t, const Vec& state)>;

class NonFiniteDerivative : public std::runtime_error {
   public:
    NonFiniteDerivative(const std::string& what, int index) : std::runtime_error(what), index_(index) {}
    int index() const { return index_; }

   private:
    int index_;
};

/// One classical Runge-Kutta 4 step from (t, state).
Vec integrate_step(const Vec& state, const VectorField& field, double t, double dt);

// ---------------------------------------------------------------------------
// Closed-loop scenarios
// ---------------------------------------------------------------------------

/// Gains the internal-model loops need: the model, K, and the anti-windup rho.
struct LoopDesign {
    ExosystemModel model;
    RowVec K;
    double rho = 0.0;
};

struct Scenario {
    QuadraticProblem prob;
    SignalSource b_source;
    std::optional<LoopDesign> design;
    double alpha = 0.0;   // OP-GD step; <= 0 means 1 / lambda_max
    double t_end = 45.0;
    double dt = 1e-3;
    int record_every = 10;
    Vec eta0;  // n*m controller state, empty means zero
    Vec q0;    // OP-GD state, empty means zero
    bool solve_x_star = true;
};

struct Trajectory {
    std::string method;
    std::vector<double> t;
    // Columns are samples.
    Mat x, y_c, w, v, u, b, z, x_star;
    std::vector<double> eta_norm;
    double eta0_norm = 0.0;
    bool diverged = false;
    double blowup_time = 0.0;

    int samples() const { return static_cast<int>(t.size()); }
    int n() const { return static_cast<int>(x.rows()); }
};

enum class Coordinates { Original, Decoupled };

struct LoopOptions {
    bool projection = true;  // false: phi = identity (unconstrained loop)
    Coordinates coordinates = Coordinates::Original;
    std::optional<double> rho_override;
};

/// Projected internal-model anti-windup loop:
///   eta' = F_ext eta + H_ext u,  y_c = K_ext eta,  x = proj(y_c),
///   w = y_c - x,  v = rho w,  u = (A x + b(t)) + v.
/// In Decoupled coordinates the same loop runs on V^T-transformed signals
/// with Lambda in place of A and phi in place of the projection; recorded
/// signals are mapped back to the original coordinates.
Trajectory simulate_loop(const Scenario& sc, const LoopOptions& opts);

Trajectory simulate_pimaw(const Scenario& sc, std::optional<double> rho_override = std::nullopt);
Trajectory simulate_pimaw_decoupled(const Scenario& sc, std::optional<double> rho_override = std::nullopt);

/// The internal-model loop with the projection removed.
Trajectory simulate_unconstrained_im(const Scenario& sc, Coordinates coords = Coordinates::Original);

/// q' = -q + proj(q - alpha (A q + b(t))); x := q, w := 0, z := A q + b.
Trajectory simulate_opgd(const Scenario& sc);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// ||x(t_k) - x*(t_k)|| per recorded sample.
std::vector<double> tracking_error(const Trajectory& traj);

/// ||grad f_t(x(t_k))|| = ||A x + b|| per recorded sample.
std::vector<double> gradient_norm(const Trajectory& traj, const QuadraticProblem& prob);

struct L2Check {
    double lhs = 0.0;  // int ||z||^2 over the full run
    double rhs = 0.0;  // gamma^2 int ||b||^2
    bool pass = false;
    int first_failure = -1;  // sample index of the first violated prefix
};

class L2CheckRefused : public std::logic_error {
   public:
    using std::logic_error::logic_error;
};

/// Trapezoidal prefix check int_0^T ||z||^2 <= gamma^2 int_0^T ||b||^2 (1 + rel_slack)
/// at every recorded T. Requires a zero initial controller state.
L2Check l2_performance_check(const Trajectory& traj, double gamma, double rel_slack = 1e-3);

/// Same check from sampled norms (t, ||z||, ||b||), e.g. read back from CSV.
L2Check l2_performance_check(const std::vector<double>& t, const std::vector<double>& znorm,
                             const std::vector<double>& bnorm, double gamma, double rel_slack = 1e-3);

/// Mean of `series` over samples with t >= (1 - fraction) * t_last.
double final_window_mean(const std::vector<double>& t, const std::vector<double>& series, double fraction = 0.2);

/// Switching instants of the active set of x*(t): sample indices where the
/// set {i : x*_i(t) <= tol} changes.
std::vector<int> switching_samples(const Trajectory& traj, double tol = 1e-9);

/// Max of `series` over windows [t_s, t_s + window] after each switching instant.
double switching_window_peak(const Trajectory& traj, const std::vector<double>& series, double window);

}  // namespace pimaw
