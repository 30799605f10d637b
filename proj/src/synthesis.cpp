#include "pimaw/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pimaw {

HurwitzReport verify_hurwitz(const ExosystemModel& model, const RowVec& K, const std::vector<double>& lambdas,
                             double threshold) {
    require_dims(K.size() == model.m, "verify_hurwitz: K must have m entries");
    HurwitzReport rep;
    rep.threshold = threshold;
    rep.pass = true;
    for (double lam : lambdas) {
        const Mat Fcl = model.F + lam * model.H_col * K;
        Eigen::EigenSolver<Mat> es(Fcl, false);
        const double mr = es.eigenvalues().real().maxCoeff();
        rep.lambdas.push_back(lam);
        rep.max_real.push_back(mr);
        if (!(mr < threshold)) rep.pass = false;
    }
    return rep;
}

std::vector<double> interior_samples(double lo, double hi, int count) {
    std::vector<double> out;
    out.reserve(static_cast<size_t>(std::max(count, 0)));
    for (int i = 1; i <= count; ++i) out.push_back(lo + (hi - lo) * static_cast<double>(i) / (count + 1));
    return out;
}

lmi::LmiSystem stabilization_lmi(const ExosystemModel& model, double lambda_min, double lambda_max, double eps_decay,
                                 const StabilizationOptions& opts) {
    const int m = model.m;
    lmi::LmiSystem sys;
    const auto W = sys.add_symmetric("W", m, opts.w_bound);
    std::vector<lmi::VarRef> Z;
    for (int j = 0; j < m; ++j) Z.push_back(sys.add_scalar("Z" + std::to_string(j), opts.z_bound));

    auto zrow = [Z, m](const lmi::Point& p) {
        RowVec z(m);
        for (int j = 0; j < m; ++j) z(j) = p.scalar(Z[static_cast<size_t>(j)]);
        return z;
    };
    const Mat F = model.F;
    const Vec H = model.H_col;
    for (double lam : {lambda_min, lambda_max}) {
        std::ostringstream name;
        name << "decay@" << lam;
        sys.add_constraint(name.str(), [=](const lmi::Point& p) {
            const Mat Wm = p.symmetric(W);
            const Mat X = F * Wm + lam * H * zrow(p);
            return Mat(X + X.transpose() + 2.0 * eps_decay * Wm);
        });
        if (lambda_min == lambda_max) break;
    }
    sys.add_constraint("W>0", [=](const lmi::Point& p) { return Mat(-p.symmetric(W)); });
    return sys;
}

GainDesign synthesize_K(const ExosystemModel& model, double lambda_min, double lambda_max,
                        const StabilizationOptions& opts) {
    if (!(lambda_min > 0.0) || !(lambda_min <= lambda_max))
        throw InvalidInput("synthesize_K: need 0 < lambda_min <= lambda_max");
    if (!(opts.eps_decay > 0.0)) throw InvalidInput("synthesize_K: eps_decay must be positive");

    std::vector<double> ladder{opts.eps_decay};
    for (double e : opts.eps_ladder)
        if (e < opts.eps_decay) ladder.push_back(e);

    double best_margin = std::numeric_limits<double>::infinity();
    for (double eps : ladder) {
        const auto sys = stabilization_lmi(model, lambda_min, lambda_max, eps, opts);
        const auto cert = lmi::solve_feasibility(sys, opts.solver);
        best_margin = std::min(best_margin, cert.best_margin);
        if (cert.status != lmi::Status::Feasible) continue;

        const auto p = sys.point(cert.point);
        GainDesign out;
        out.eps_decay = eps;
        out.W = p.symmetric(lmi::VarRef{0});
        out.Z = RowVec(model.m);
        for (int j = 0; j < model.m; ++j) out.Z(j) = p.scalar(lmi::VarRef{1 + j});
        out.K = out.W.llt().solve(out.Z.transpose()).transpose();  // Z W^{-1}, W symmetric
        out.lmi_margins = cert.margins;

        std::vector<double> lambdas{lambda_min, lambda_max};
        for (double l : interior_samples(lambda_min, lambda_max, 20)) lambdas.push_back(l);
        out.hurwitz = verify_hurwitz(model, out.K, lambdas);
        if (!out.hurwitz.pass) {
            std::ostringstream os;
            os << "synthesize_K: solved gain fails the Hurwitz re-check; max real parts:";
            for (size_t i = 0; i < lambdas.size(); ++i) os << " [" << lambdas[i] << ": " << out.hurwitz.max_real[i] << "]";
            throw VerificationFailure(os.str(), out.hurwitz);
        }
        return out;
    }
    std::ostringstream os;
    os << "synthesize_K: no stabilizing gain found down to eps_decay = " << ladder.back();
    throw SynthesisInfeasible(os.str(), ladder.back(), best_margin);
}

Mat assemble_antiwindup_lmi(const ExosystemModel& model, const RowVec& K, double lambda, double gamma, const Mat& Qbar,
                            double delta, double xi) {
    const int m = model.m;
    require_dims(K.size() == m, "assemble_antiwindup_lmi: K must have m entries");
    require_dims(Qbar.rows() == m && Qbar.cols() == m, "assemble_antiwindup_lmi: Qbar must be m x m");
    const Vec& H = model.H_col;
    const Mat Fl = model.F + lambda * H * K;
    const Vec QKt = Qbar * K.transpose();

    Mat M = Mat::Zero(m + 3, m + 3);
    M.topLeftCorner(m, m) = Qbar * Fl.transpose() + Fl * Qbar;
    M.block(0, m, m, 1) = H * (xi - delta * lambda) + QKt;
    M.block(0, m + 1, m, 1) = H;
    M.block(0, m + 2, m, 1) = QKt * lambda;
    M(m, m) = -2.0 * delta;
    M(m, m + 1) = 0.0;
    M(m, m + 2) = delta * (1.0 - lambda);
    M(m + 1, m + 1) = -gamma;
    M(m + 1, m + 2) = 1.0;
    M(m + 2, m + 2) = -gamma;
    // Mirror the strictly upper blocks.
    for (int j = 0; j < m + 3; ++j)
        for (int i = j + 1; i < m + 3; ++i) M(i, j) = M(j, i);
    return M;
}

lmi::LmiSystem antiwindup_lmi(const ExosystemModel& model, const RowVec& K, double lambda_min, double lambda_max,
                              double gamma, const AntiWindupOptions& opts, std::optional<double> fixed_rho) {
    lmi::LmiSystem sys;
    const auto Q = sys.add_symmetric("Qbar", model.m, opts.q_bound);
    const auto delta = sys.add_scalar("delta", opts.scalar_bound);
    std::optional<lmi::VarRef> xi;
    if (!fixed_rho) xi = sys.add_scalar("xi", opts.scalar_bound);

    for (double lam : {lambda_min, lambda_max}) {
        std::ostringstream name;
        name << "performance@" << lam;
        sys.add_constraint(name.str(), [=](const lmi::Point& p) {
            const double d = p.scalar(delta);
            return assemble_antiwindup_lmi(model, K, lam, gamma, p.symmetric(Q), d, xi ? p.scalar(*xi) : *fixed_rho * d);
        });
        if (lambda_min == lambda_max) break;
    }
    sys.add_constraint("Qbar>0", [=](const lmi::Point& p) { return Mat(-p.symmetric(Q)); });
    sys.add_constraint("delta>0", [=](const lmi::Point& p) { return Mat::Constant(1, 1, -p.scalar(delta)); });
    return sys;
}

AntiWindupResult solve_antiwindup(const ExosystemModel& model, const RowVec& K, double lambda_min, double lambda_max,
                                  double gamma, const AntiWindupOptions& opts) {
    require_dims(K.size() == model.m, "solve_antiwindup: K must have m entries");
    if (!(gamma > 0.0)) throw InvalidInput("solve_antiwindup: gamma must be positive");
    if (!(lambda_min > 0.0) || !(lambda_min <= lambda_max))
        throw InvalidInput("solve_antiwindup: need 0 < lambda_min <= lambda_max");

    const auto sys = antiwindup_lmi(model, K, lambda_min, lambda_max, gamma, opts);
    auto cfg = opts.solver;
    cfg.tol_feas = opts.tol_feas;
    const auto cert = lmi::solve_feasibility(sys, cfg);

    AntiWindupResult res;
    res.status = cert.status;
    res.best_margin = cert.best_margin;
    res.trace = cert.trace;
    if (cert.status != lmi::Status::Feasible) return res;

    const auto p = sys.point(cert.point);
    AntiWindupDesign d;
    d.Qbar = p.symmetric(lmi::VarRef{0});
    d.delta = p.scalar(lmi::VarRef{1});
    d.xi = p.scalar(lmi::VarRef{2});
    d.gamma = gamma;
    d.rho = d.xi / d.delta;
    d.cert.solver_iterations = cert.iterations;

    // Independent re-verification from the assembled matrices.
    d.cert.margin_lambda_min =
        lmi::eig_max_symmetric(assemble_antiwindup_lmi(model, K, lambda_min, gamma, d.Qbar, d.delta, d.xi));
    d.cert.margin_lambda_max =
        lmi::eig_max_symmetric(assemble_antiwindup_lmi(model, K, lambda_max, gamma, d.Qbar, d.delta, d.xi));
    d.cert.q_min_eig = Eigen::SelfAdjointEigenSolver<Mat>(d.Qbar, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    if (std::abs(d.rho) < 1e-12) {
        d.rho = 0.0;
        d.cert.rho_near_zero = true;
    }
    const bool ok = d.cert.margin_lambda_min < -opts.tol_feas && d.cert.margin_lambda_max < -opts.tol_feas &&
                    d.cert.q_min_eig >= opts.tol_feas && d.delta >= opts.tol_feas;
    if (!ok) {
        res.status = lmi::Status::Infeasible;
        res.best_margin = std::max(d.cert.margin_lambda_min, d.cert.margin_lambda_max);
        return res;
    }
    res.design = d;
    return res;
}

GammaSearch minimize_gamma(const ExosystemModel& model, const RowVec& K, double lambda_min, double lambda_max,
                           double gamma_hi, double tol_gamma, const AntiWindupOptions& opts, double gamma_floor) {
    if (!(tol_gamma > 0.0)) throw InvalidInput("minimize_gamma: tol_gamma must be positive");
    GammaSearch out;
    auto top = solve_antiwindup(model, K, lambda_min, lambda_max, gamma_hi, opts);
    out.probes.emplace_back(gamma_hi, top.design.has_value());
    if (!top.design) {
        std::ostringstream os;
        os << "minimize_gamma: infeasible at gamma_hi = " << gamma_hi << " (best margin " << top.best_margin << ")";
        throw SynthesisInfeasible(os.str(), 0.0, top.best_margin);
    }
    double hi = gamma_hi;
    AntiWindupDesign best = *top.design;

    double lo = gamma_floor;
    auto bottom = solve_antiwindup(model, K, lambda_min, lambda_max, lo, opts);
    out.probes.emplace_back(lo, bottom.design.has_value());
    if (bottom.design) {
        out.gamma_star = lo;
        out.design = *bottom.design;
        return out;
    }
    while (hi / lo > 1.0 + tol_gamma) {
        const double mid = std::sqrt(hi * lo);
        auto r = solve_antiwindup(model, K, lambda_min, lambda_max, mid, opts);
        out.probes.emplace_back(mid, r.design.has_value());
        if (r.design) {
            hi = mid;
            best = *r.design;
        } else {
            lo = mid;
        }
    }
    out.gamma_star = hi;
    out.design = best;
    return out;
}

}  // namespace pimaw
