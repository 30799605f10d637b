#include "pimaw/lmi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace pimaw::lmi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Flat coordinate index of entry (i, j), i <= j, of a symmetric(dim) variable.
int sym_coord(int i, int j) { return j * (j + 1) / 2 + i; }

}  // namespace

double Point::scalar(VarRef v) const {
    const auto& var = vars_->at(static_cast<size_t>(v.index));
    if (var.kind != VariableKind::Scalar) throw InvalidInput("Point::scalar: '" + var.name + "' is not a scalar");
    return coords_(var.offset);
}

Mat Point::symmetric(VarRef v) const {
    const auto& var = vars_->at(static_cast<size_t>(v.index));
    if (var.kind != VariableKind::Symmetric)
        throw InvalidInput("Point::symmetric: '" + var.name + "' is not a symmetric matrix");
    Mat S(var.dim, var.dim);
    for (int j = 0; j < var.dim; ++j)
        for (int i = 0; i <= j; ++i) S(i, j) = S(j, i) = coords_(var.offset + sym_coord(i, j));
    return S;
}

VarRef LmiSystem::add_scalar(std::string name, double bound) {
    Variable v{std::move(name), VariableKind::Scalar, 1, num_coordinates(), bound};
    vars_.push_back(std::move(v));
    return VarRef{static_cast<int>(vars_.size()) - 1};
}

VarRef LmiSystem::add_symmetric(std::string name, int dim, double bound) {
    if (dim < 1) throw InvalidInput("add_symmetric: dimension must be positive");
    Variable v{std::move(name), VariableKind::Symmetric, dim, num_coordinates(), bound};
    vars_.push_back(std::move(v));
    return VarRef{static_cast<int>(vars_.size()) - 1};
}

int LmiSystem::num_coordinates() const {
    int n = 0;
    for (const auto& v : vars_) n += v.coordinates();
    return n;
}

void LmiSystem::add_constraint(std::string name, const std::function<Mat(const Point&)>& expr) {
    const int N = num_coordinates();
    AffineConstraint c;
    c.name = std::move(name);
    c.constant = expr(point(Vec::Zero(N)));
    c.size = static_cast<int>(c.constant.rows());
    c.coefficients.reserve(static_cast<size_t>(N));
    for (int j = 0; j < N; ++j) c.coefficients.push_back(expr(point(Vec::Unit(N, j))) - c.constant);

    Vec probe(N);
    for (int j = 0; j < N; ++j) probe(j) = 0.37 + 0.11 * j;
    Mat predicted = c.constant;
    for (int j = 0; j < N; ++j) predicted += probe(j) * c.coefficients[static_cast<size_t>(j)];
    const Mat actual = expr(point(probe));
    require_dims(actual.rows() == predicted.rows() && actual.cols() == predicted.cols(),
                 "add_constraint: expression changes shape");
    const double err = (actual - predicted).cwiseAbs().maxCoeff();
    if (err > 1e-9 * (1.0 + actual.cwiseAbs().maxCoeff()))
        throw InvalidInput("add_constraint: '" + c.name + "' is not affine in the decision variables");
    add_constraint(std::move(c));
}

void LmiSystem::add_constraint(AffineConstraint c) {
    cons_.push_back(std::move(c));
    validate();
}

Mat LmiSystem::evaluate(int k, const Vec& coords) const {
    const auto& c = cons_.at(static_cast<size_t>(k));
    Mat M = c.constant;
    for (size_t j = 0; j < c.coefficients.size(); ++j) M += coords(static_cast<Eigen::Index>(j)) * c.coefficients[j];
    return M;
}

void LmiSystem::validate() const {
    const int N = num_coordinates();
    for (const auto& v : vars_)
        if (!(v.bound > 0.0)) throw InvalidInput("LmiSystem: variable '" + v.name + "' needs a positive bound");
    for (const auto& c : cons_) {
        auto check = [&](const Mat& M, const char* what) {
            if (M.rows() != c.size || M.cols() != c.size)
                throw InvalidInput("LmiSystem: constraint '" + c.name + "' has a non-square or mis-sized " + what);
            if (M.size() > 0 && (M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff()))
                throw InvalidInput("LmiSystem: constraint '" + c.name + "' has an asymmetric " + what);
        };
        if (c.size < 1) throw InvalidInput("LmiSystem: constraint '" + c.name + "' is empty");
        check(c.constant, "constant block");
        if (static_cast<int>(c.coefficients.size()) != N)
            throw InvalidInput("LmiSystem: constraint '" + c.name + "' coefficient count does not match variables");
        for (const auto& C : c.coefficients) check(C, "coefficient block");
    }
}

double eig_max_symmetric(const Mat& M) {
    require_dims(M.rows() == M.cols() && M.rows() > 0, "eig_max_symmetric: matrix must be square and non-empty");
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    const double asym = (M - M.transpose()).cwiseAbs().maxCoeff() / scale;
    if (asym > 1e-12) throw AsymmetricMatrix("eig_max_symmetric: matrix is not symmetric", asym);
    Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

const char* to_string(Status s) {
    switch (s) {
        case Status::Feasible: return "feasible";
        case Status::Infeasible: return "infeasible";
        case Status::Stalled: return "stalled";
    }
    return "unknown";
}

namespace {

// Barrier over z = (v, [t]). With a shift the slack of constraint k is
// S_k = t I - M_k(v); without it S_k = -M_k(v).
class Barrier {
   public:
    Barrier(const LmiSystem& sys, bool with_shift) : sys_(sys), shift_(with_shift), N_(sys.num_coordinates()) {
        for (const auto& v : sys.variables())
            for (int c = 0; c < v.coordinates(); ++c) bounds_.push_back(v.bound);
    }

    int dim() const { return N_ + (shift_ ? 1 : 0); }

    // Barrier value plus weight * t; +inf outside the domain.
    double value(const Vec& z, double weight) const {
        double f = shift_ ? weight * z(N_) : 0.0;
        for (int j = 0; j < N_; ++j) {
            const double R = bounds_[static_cast<size_t>(j)];
            if (!(std::abs(z(j)) < R)) return kInf;
            f -= std::log(R - z(j)) + std::log(R + z(j));
        }
        for (int k = 0; k < static_cast<int>(sys_.constraints().size()); ++k) {
            Eigen::LLT<Mat> llt(slack(k, z));
            if (llt.info() != Eigen::Success) return kInf;
            const auto d = llt.matrixLLT().diagonal();
            if ((d.array() <= 0.0).any()) return kInf;
            f -= 2.0 * d.array().log().sum();
        }
        return f;
    }

    void derivatives(const Vec& z, double weight, Vec& g, Mat& H) const {
        const int D = dim();
        g = Vec::Zero(D);
        H = Mat::Zero(D, D);
        if (shift_) g(N_) = weight;
        for (int j = 0; j < N_; ++j) {
            const double R = bounds_[static_cast<size_t>(j)];
            const double a = 1.0 / (R - z(j));
            const double b = 1.0 / (R + z(j));
            g(j) += a - b;
            H(j, j) += a * a + b * b;
        }
        for (int k = 0; k < static_cast<int>(sys_.constraints().size()); ++k) {
            const auto& c = sys_.constraints()[static_cast<size_t>(k)];
            const Mat Sinv = slack(k, z).llt().solve(Mat::Identity(c.size, c.size));
            // d(-S)/dz_j: C_j for coordinates, -I for the shift.
            std::vector<Mat> P(static_cast<size_t>(D));
            for (int j = 0; j < N_; ++j) P[static_cast<size_t>(j)] = Sinv * c.coefficients[static_cast<size_t>(j)];
            if (shift_) P[static_cast<size_t>(N_)] = -Sinv;
            for (int i = 0; i < D; ++i) {
                g(i) += P[static_cast<size_t>(i)].trace();
                for (int j = 0; j <= i; ++j) {
                    const double h = (P[static_cast<size_t>(i)].array() * P[static_cast<size_t>(j)].transpose().array()).sum();
                    H(i, j) += h;
                    if (i != j) H(j, i) += h;
                }
            }
        }
    }

    Mat slack(int k, const Vec& z) const {
        Mat M = sys_.evaluate(k, z.head(N_));
        if (shift_) return z(N_) * Mat::Identity(M.rows(), M.cols()) - M;
        return -M;
    }

    int barrier_degree() const {
        int d = 2 * N_;
        for (const auto& c : sys_.constraints()) d += c.size;
        return d;
    }

   private:
    const LmiSystem& sys_;
    bool shift_;
    int N_;
    std::vector<double> bounds_;
};

enum class NewtonOutcome { Converged, Stopped, Budget, Failed };

// Damped Newton on barrier + weight * t. `stop` is polled after every step.
template <class Stop>
NewtonOutcome newton(const Barrier& B, Vec& z, double weight, double decrement_tol, int& budget, Stop&& stop) {
    Vec g;
    Mat H;
    double f = B.value(z, weight);
    while (true) {
        if (budget <= 0) return NewtonOutcome::Budget;
        B.derivatives(z, weight, g, H);
        Eigen::LDLT<Mat> ldlt(H);
        if (ldlt.info() != Eigen::Success) return NewtonOutcome::Failed;
        const Vec step = -ldlt.solve(g);
        const double dec2 = -g.dot(step);
        if (!std::isfinite(dec2)) return NewtonOutcome::Failed;
        if (dec2 / 2.0 <= decrement_tol) return NewtonOutcome::Converged;
        double alpha = dec2 > 0.25 ? 1.0 / (1.0 + std::sqrt(dec2)) : 1.0;
        Vec trial;
        double ft = kInf;
        for (int ls = 0; ls < 60; ++ls) {
            trial = z + alpha * step;
            ft = B.value(trial, weight);
            if (ft <= f - 0.25 * alpha * dec2) break;
            alpha *= 0.5;
        }
        --budget;
        if (!std::isfinite(ft) || !(ft < f)) return dec2 < 1e-8 ? NewtonOutcome::Converged : NewtonOutcome::Failed;
        z = trial;
        f = ft;
        if (stop(z)) return NewtonOutcome::Stopped;
    }
}

std::vector<double> margins_at(const LmiSystem& sys, const Vec& v) {
    std::vector<double> out;
    for (int k = 0; k < static_cast<int>(sys.constraints().size()); ++k) out.push_back(eig_max_symmetric(sys.evaluate(k, v)));
    return out;
}

double worst(const std::vector<double>& m) {
    return m.empty() ? -kInf : *std::max_element(m.begin(), m.end());
}

}  // namespace

Certificate solve_feasibility(const LmiSystem& sys, const SolverConfig& config) {
    sys.validate();
    if (!(config.tol_feas > 0.0)) throw InvalidInput("solve_feasibility: tol_feas must be positive");
    const int N = sys.num_coordinates();
    Certificate cert;

    if (sys.constraints().empty()) {
        cert.status = Status::Feasible;
        cert.point = Vec::Zero(N);
        cert.best_margin = -kInf;
        return cert;
    }

    // Phase 1.
    const Barrier shifted(sys, true);
    Vec z = Vec::Zero(N + 1);
    const double m0 = worst(margins_at(sys, z.head(N)));
    z(N) = m0 + 1.0 + 0.1 * std::abs(m0);
    const double exit_shift = -10.0 * config.tol_feas;
    double weight = static_cast<double>(shifted.barrier_degree()) / std::max(1.0, std::abs(z(N)));
    int budget = config.max_iter;
    bool found = false;
    bool converged = false;
    auto below = [&](const Vec& zz) { return zz(N) < exit_shift; };

    while (true) {
        const auto outcome = newton(shifted, z, weight, 1e-9, budget, below);
        cert.trace.push_back(z(N));
        if (outcome == NewtonOutcome::Stopped || below(z)) {
            found = true;
            break;
        }
        const double gap = static_cast<double>(shifted.barrier_degree()) / weight;
        if (outcome == NewtonOutcome::Budget) break;
        if (outcome == NewtonOutcome::Failed) {
            // Rounding stops progress near the optimum; accept a tight enough gap.
            converged = gap <= 1e-6 * std::max(1.0, std::abs(z(N)));
            break;
        }
        if (gap <= config.gap_tol * std::max(1.0, std::abs(z(N)))) {
            converged = true;
            break;
        }
        weight *= 8.0;
    }

    const Vec phase1_point = z.head(N);
    const std::vector<double> phase1_margins = margins_at(sys, phase1_point);
    cert.iterations = config.max_iter - budget;

    if (!found) {
        if (worst(phase1_margins) < -config.tol_feas) {
            found = true;  // thin but strictly feasible
        } else {
            cert.point = phase1_point;
            cert.margins = phase1_margins;
            cert.best_margin = worst(phase1_margins);
            cert.status = converged ? Status::Infeasible : Status::Stalled;
            return cert;
        }
    }

    // Phase 2: analytic center of the feasible set.
    const Barrier centered(sys, false);
    Vec v = phase1_point;
    int budget2 = std::max(budget, 50);
    newton(centered, v, 0.0, 1e-12, budget2, [](const Vec&) { return false; });
    cert.iterations += std::max(budget, 50) - budget2;

    const std::vector<double> phase2_margins = margins_at(sys, v);
    if (worst(phase2_margins) < -config.tol_feas) {
        cert.point = v;
        cert.margins = phase2_margins;
    } else {
        cert.point = phase1_point;
        cert.margins = phase1_margins;
    }
    cert.best_margin = worst(cert.margins);
    cert.status = cert.best_margin < -config.tol_feas ? Status::Feasible : Status::Infeasible;
    return cert;
}

}  // namespace pimaw::lmi
