#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pimaw/core.hpp"
#include "pimaw/lmi.hpp"

namespace pimaw {

struct HurwitzReport {
    std::vector<double> lambdas;
    std::vector<double> max_real;  // max Re(eig(F + lambda H_col K)) per lambda
    bool pass = false;
    double threshold = -1e-8;
};

/// Eigenvalues of F + lambda H_col K for every lambda; passes iff all real
/// parts are below `threshold`.
HurwitzReport verify_hurwitz(const ExosystemModel& model, const RowVec& K, const std::vector<double>& lambdas,
                             double threshold = -1e-8);

/// `count` evenly spaced points strictly inside (lo, hi); `count` copies of
/// lo when the interval is degenerate.
std::vector<double> interior_samples(double lo, double hi, int count);

struct StabilizationOptions {
    double eps_decay = 0.5;
    std::vector<double> eps_ladder = {0.5, 0.25, 0.1, 0.05};
    double w_bound = 1.0;
    double z_bound = 10.0;
    lmi::SolverConfig solver{};
};

struct GainDesign {
    RowVec K;
    double eps_decay = 0.0;  // the decay rate actually certified
    Mat W;
    RowVec Z;
    std::vector<double> lmi_margins;
    HurwitzReport hurwitz;
};

class SynthesisInfeasible : public std::runtime_error {
   public:
    SynthesisInfeasible(const std::string& what, double smallest_eps, double best_margin)
        : std::runtime_error(what), smallest_eps_(smallest_eps), best_margin_(best_margin) {}
    double smallest_eps() const { return smallest_eps_; }
    double best_margin() const { return best_margin_; }

   private:
    double smallest_eps_;
    double best_margin_;
};

class VerificationFailure : public std::runtime_error {
   public:
    VerificationFailure(const std::string& what, HurwitzReport report)
        : std::runtime_error(what), report_(std::move(report)) {}
    const HurwitzReport& report() const { return report_; }

   private:
    HurwitzReport report_;
};

/// The two vertex stabilization constraints
///   (F W + lambda H Z) + (.)^T + 2 eps W < 0,  lambda in {lambda_min, lambda_max},
/// plus W > 0, in variables W (symmetric m) and Z (m scalars).
lmi::LmiSystem stabilization_lmi(const ExosystemModel& model, double lambda_min, double lambda_max, double eps_decay,
                                 const StabilizationOptions& opts = {});

/// Robust internal-model gain K = Z W^{-1} with F + lambda H K Hurwitz for
/// every lambda in [lambda_min, lambda_max]. Tries `eps_decay` and then the
/// smaller ladder entries; the result is re-checked at the vertices and at
/// 20 interior samples.
GainDesign synthesize_K(const ExosystemModel& model, double lambda_min, double lambda_max,
                        const StabilizationOptions& opts = {});

// ---------------------------------------------------------------------------
// Anti-windup gain
// ---------------------------------------------------------------------------

/// The (m+3) x (m+3) performance matrix for one eigenvalue lambda, rows
/// ordered (controller state, dead-zone output, exogenous input, performance
/// output):
///
///   [ Q F(l)^T + F(l) Q   H (xi - delta l) + Q K^T   H    Q K^T l        ]
///   [        *                 -2 delta              0    delta (1 - l)  ]
///   [        *                     *              -gamma       1         ]
///   [        *                     *                 *      -gamma       ]
///
/// with F(l) = F + l H K.
Mat assemble_antiwindup_lmi(const ExosystemModel& model, const RowVec& K, double lambda, double gamma, const Mat& Qbar,
                            double delta, double xi);

struct AntiWindupOptions {
    double q_bound = 1e3;
    double scalar_bound = 1e3;
    double tol_feas = 1e-9;
    lmi::SolverConfig solver{};
};

struct AntiWindupCertificate {
    double margin_lambda_min = 0.0;  // max eigenvalue at each vertex
    double margin_lambda_max = 0.0;
    double q_min_eig = 0.0;
    int solver_iterations = 0;
    bool rho_near_zero = false;
};

struct AntiWindupDesign {
    Mat Qbar;
    double delta = 0.0;
    double xi = 0.0;
    double rho = 0.0;
    double gamma = 0.0;
    AntiWindupCertificate cert;
};

struct AntiWindupResult {
    lmi::Status status = lmi::Status::Infeasible;
    std::optional<AntiWindupDesign> design;
    double best_margin = 0.0;    // when not feasible
    std::vector<double> trace;   // solver phase-1 shift history
};

/// Variables Qbar (symmetric m), delta, xi; constraints are the performance
/// matrix at both vertices, Qbar > 0 and delta > 0. With `fixed_rho` set,
/// xi is replaced by fixed_rho * delta.
lmi::LmiSystem antiwindup_lmi(const ExosystemModel& model, const RowVec& K, double lambda_min, double lambda_max,
                              double gamma, const AntiWindupOptions& opts = {},
                              std::optional<double> fixed_rho = std::nullopt);

/// Solves the vertex performance LMIs for (Qbar, delta, xi) and returns
/// rho = xi / delta. A feasible answer is accepted only after both vertex
/// matrices are re-assembled and their largest eigenvalue is below
/// -tol_feas, with Qbar >= tol_feas I and delta >= tol_feas.
AntiWindupResult solve_antiwindup(const ExosystemModel& model, const RowVec& K, double lambda_min, double lambda_max,
                                  double gamma, const AntiWindupOptions& opts = {});

struct GammaSearch {
    double gamma_star = 0.0;
    AntiWindupDesign design;
    std::vector<std::pair<double, bool>> probes;  // (gamma, feasible)
};

/// Log-scale bisection for the smallest certified gamma below gamma_hi.
/// Stops when hi / lo < 1 + tol_gamma or lo reaches `gamma_floor`.
GammaSearch minimize_gamma(const ExosystemModel& model, const RowVec& K, double lambda_min, double lambda_max,
                           double gamma_hi, double tol_gamma = 1e-3, const AntiWindupOptions& opts = {},
                           double gamma_floor = 1e-6);

/// Step 1 followed by Step 2 at a fixed gamma.
struct ControllerDesign {
    ExosystemModel model;
    RowVec K;
    double rho = 0.0;
    double gamma = 0.0;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    GainDesign gain;
    AntiWindupDesign antiwindup;
};

}  // namespace pimaw
