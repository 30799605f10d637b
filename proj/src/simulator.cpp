#include "pimaw/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

namespace pimaw {

namespace {

void check_finite(const Vec& k, const char* stage) {
    for (Eigen::Index i = 0; i < k.size(); ++i) {
        if (!std::isfinite(k(i))) {
            std::ostringstream os;
            os << "integrate_step: non-finite derivative component " << i << " in stage " << stage;
            throw NonFiniteDerivative(os.str(), static_cast<int>(i));
        }
    }
}

}  // namespace

Vec integrate_step(const Vec& state, const VectorField& field, double t, double dt) {
    if (!(dt > 0.0)) throw InvalidInput("integrate_step: dt must be positive");
    const Vec k1 = field(t, state);
    check_finite(k1, "1");
    const Vec k2 = field(t + 0.5 * dt, state + 0.5 * dt * k1);
    check_finite(k2, "2");
    const Vec k3 = field(t + 0.5 * dt, state + 0.5 * dt * k2);
    check_finite(k3, "3");
    const Vec k4 = field(t + dt, state + dt * k3);
    check_finite(k4, "4");
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

// Signals of one loop evaluated at (t, state), in original coordinates.
struct Sample {
    Vec x, y_c, w, v, u, b, z;
    double eta_norm = 0.0;
};

struct LoopModel {
    std::function<Vec(double, const Vec&)> field;
    std::function<Sample(double, const Vec&)> sample;
    Vec initial;
};

void validate_scenario(const Scenario& sc) {
    if (!(sc.dt > 0.0)) throw InvalidInput("scenario: dt must be positive");
    if (!(sc.t_end >= sc.dt)) throw InvalidInput("scenario: t_end must be at least dt");
    if (sc.record_every < 1) throw InvalidInput("scenario: record_every must be at least 1");
    require_dims(signal_dimension(sc.b_source) == sc.prob.n(), "scenario: signal dimension differs from n");
}

Vec controller_initial(const Scenario& sc, int nm) {
    if (sc.eta0.size() == 0) return Vec::Zero(nm);
    require_dims(sc.eta0.size() == nm, "scenario: eta0 must have n*m entries");
    return sc.eta0;
}

LoopModel make_loop(const Scenario& sc, const LoopOptions& opts) {
    if (!sc.design) throw InvalidInput("simulate: internal-model methods need a controller design");
    const LoopDesign& d = *sc.design;
    const int n = sc.prob.n();
    const int m = d.model.m;
    require_dims(d.K.size() == m, "simulate: K must have m entries");
    const double rho = opts.rho_override.value_or(d.rho);
    const bool proj = opts.projection;
    const Mat A = sc.prob.A();
    const SignalSource src = sc.b_source;
    const Vec eta0 = controller_initial(sc, n * m);

    LoopModel lm;
    if (opts.coordinates == Coordinates::Original) {
        const ExtendedRealization ext = kron_extend(d.model, d.K, n);
        auto signals = [=](double t, const Vec& eta) {
            Sample s;
            s.b = b_of_t(src, t);
            s.y_c = ext.K_ext * eta;
            s.x = proj ? project_nonneg(s.y_c) : s.y_c;
            s.w = s.y_c - s.x;
            s.v = rho * s.w;
            s.u = A * s.x + s.b + s.v;
            s.z = A * s.x + s.b + s.w;
            s.eta_norm = eta.norm();
            return s;
        };
        lm.field = [=](double t, const Vec& eta) -> Vec {
            const Vec y_c = ext.K_ext * eta;
            const Vec x = proj ? project_nonneg(y_c) : y_c;
            const Vec u = A * x + b_of_t(src, t) + rho * (y_c - x);
            return ext.F_ext * eta + ext.H_ext * u;
        };
        lm.sample = signals;
        lm.initial = eta0;
        return lm;
    }

    // Decoupled: state holds eta_bar = (V^T (x) I_m) eta as an m x n block.
    const Orthogonal& Vo = sc.prob.V();
    const Mat V = Vo.matrix();
    const Vec lambda = sc.prob.eig().values;
    const Mat F = d.model.F;
    const Vec H = d.model.H_col;
    const RowVec K = d.K;
    auto decoupled = [=](double t, const Vec& etab, Vec& xb, Vec& ycb, Vec& wb, Vec& ub, Vec& bb) {
        const Eigen::Map<const Mat> E(etab.data(), m, n);
        ycb = (K * E).transpose();
        xb = proj ? phi(Vo, ycb) : ycb;
        wb = ycb - xb;
        bb = V.transpose() * b_of_t(src, t);
        ub = lambda.cwiseProduct(xb) + bb + rho * wb;
    };
    lm.field = [=](double t, const Vec& etab) -> Vec {
        Vec xb, ycb, wb, ub, bb;
        decoupled(t, etab, xb, ycb, wb, ub, bb);
        const Eigen::Map<const Mat> E(etab.data(), m, n);
        Mat dE = F * E + H * ub.transpose();
        return Eigen::Map<const Vec>(dE.data(), n * m);
    };
    lm.sample = [=](double t, const Vec& etab) {
        Vec xb, ycb, wb, ub, bb;
        decoupled(t, etab, xb, ycb, wb, ub, bb);
        Sample s;
        s.b = V * bb;
        s.x = V * xb;
        s.y_c = V * ycb;
        s.w = V * wb;
        s.v = rho * s.w;
        s.u = V * ub;
        s.z = V * (lambda.cwiseProduct(xb) + bb + wb);
        s.eta_norm = etab.norm();
        return s;
    };
    const Eigen::Map<const Mat> E0(eta0.data(), m, n);
    const Mat Eb0 = E0 * V;
    lm.initial = Eigen::Map<const Vec>(Eb0.data(), n * m);
    return lm;
}

void fill_x_star(Trajectory& traj, const Mat& A) {
    const int N = traj.samples();
    traj.x_star.resize(traj.n(), N);
    auto work = [&](int lo, int hi) {
        for (int k = lo; k < hi; ++k) traj.x_star.col(k) = solve_nonneg_qp(A, traj.b.col(k)).x_star;
    };
    const int threads = N > 2000 ? static_cast<int>(std::clamp(std::thread::hardware_concurrency(), 1u, 8u)) : 1;
    if (threads == 1) {
        work(0, N);
        return;
    }
    std::vector<std::thread> pool;
    const int chunk = (N + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t * chunk, std::min(N, (t + 1) * chunk));
    for (auto& th : pool) th.join();
}

Trajectory run(const Scenario& sc, const LoopModel& lm, std::string method, double initial_norm) {
    validate_scenario(sc);
    const int n = sc.prob.n();
    const long steps = std::lround(sc.t_end / sc.dt);
    std::vector<long> record;
    for (long k = 0; k <= steps; k += sc.record_every) record.push_back(k);
    if (record.back() != steps) record.push_back(steps);

    Trajectory traj;
    traj.method = std::move(method);
    traj.eta0_norm = initial_norm;
    const auto cap = static_cast<Eigen::Index>(record.size());
    for (Mat* M : {&traj.x, &traj.y_c, &traj.w, &traj.v, &traj.u, &traj.b, &traj.z}) M->resize(n, cap);

    auto store = [&](double t, const Vec& state) {
        const Sample s = lm.sample(t, state);
        const auto j = static_cast<Eigen::Index>(traj.t.size());
        traj.t.push_back(t);
        traj.x.col(j) = s.x;
        traj.y_c.col(j) = s.y_c;
        traj.w.col(j) = s.w;
        traj.v.col(j) = s.v;
        traj.u.col(j) = s.u;
        traj.b.col(j) = s.b;
        traj.z.col(j) = s.z;
        traj.eta_norm.push_back(s.eta_norm);
    };

    Vec state = lm.initial;
    size_t next = 0;
    for (long k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * sc.dt;
        if (next < record.size() && record[next] == k) {
            store(t, state);
            ++next;
        }
        if (k == steps) break;
        try {
            state = integrate_step(state, lm.field, t, sc.dt);
        } catch (const NonFiniteDerivative&) {
            traj.diverged = true;
        }
        if (traj.diverged || !state.allFinite() || state.lpNorm<Eigen::Infinity>() > 1e12) {
            traj.diverged = true;
            traj.blowup_time = t + sc.dt;
            break;
        }
    }
    const auto N = static_cast<Eigen::Index>(traj.t.size());
    for (Mat* M : {&traj.x, &traj.y_c, &traj.w, &traj.v, &traj.u, &traj.b, &traj.z}) M->conservativeResize(n, N);
    if (sc.solve_x_star) fill_x_star(traj, sc.prob.A());
    return traj;
}

}  // namespace

Trajectory simulate_loop(const Scenario& sc, const LoopOptions& opts) {
    const LoopModel lm = make_loop(sc, opts);
    std::string method = opts.projection ? "pimaw" : "unconstrained-im";
    if (opts.projection && opts.rho_override) method = "pimaw-rho-override";
    if (opts.coordinates == Coordinates::Decoupled) method += "-decoupled";
    return run(sc, lm, method, lm.initial.norm());
}

Trajectory simulate_pimaw(const Scenario& sc, std::optional<double> rho_override) {
    return simulate_loop(sc, LoopOptions{true, Coordinates::Original, rho_override});
}

Trajectory simulate_pimaw_decoupled(const Scenario& sc, std::optional<double> rho_override) {
    return simulate_loop(sc, LoopOptions{true, Coordinates::Decoupled, rho_override});
}

Trajectory simulate_unconstrained_im(const Scenario& sc, Coordinates coords) {
    return simulate_loop(sc, LoopOptions{false, coords, std::nullopt});
}

Trajectory simulate_opgd(const Scenario& sc) {
    const int n = sc.prob.n();
    const double alpha = sc.alpha > 0.0 ? sc.alpha : 1.0 / sc.prob.lambda_max();
    const Mat A = sc.prob.A();
    const SignalSource src = sc.b_source;
    LoopModel lm;
    lm.field = [=](double t, const Vec& q) -> Vec {
        return -q + project_nonneg(q - alpha * (A * q + b_of_t(src, t)));
    };
    lm.sample = [=](double t, const Vec& q) {
        Sample s;
        s.b = b_of_t(src, t);
        s.x = q;
        s.u = A * q + s.b;
        s.y_c = q - alpha * s.u;
        s.w = Vec::Zero(n);
        s.v = Vec::Zero(n);
        s.z = s.u;
        s.eta_norm = q.norm();
        return s;
    };
    if (sc.q0.size() == 0) {
        lm.initial = Vec::Zero(n);
    } else {
        require_dims(sc.q0.size() == n, "scenario: q0 must have n entries");
        lm.initial = sc.q0;
    }
    return run(sc, lm, "opgd", lm.initial.norm());
}

std::vector<double> tracking_error(const Trajectory& traj) {
    if (traj.x_star.cols() != traj.x.cols()) throw InvalidInput("tracking_error: x_star is not populated");
    std::vector<double> e(static_cast<size_t>(traj.samples()));
    for (int k = 0; k < traj.samples(); ++k) e[static_cast<size_t>(k)] = (traj.x.col(k) - traj.x_star.col(k)).norm();
    return e;
}

std::vector<double> gradient_norm(const Trajectory& traj, const QuadraticProblem& prob) {
    std::vector<double> g(static_cast<size_t>(traj.samples()));
    for (int k = 0; k < traj.samples(); ++k)
        g[static_cast<size_t>(k)] = (prob.A() * traj.x.col(k) + traj.b.col(k)).norm();
    return g;
}

L2Check l2_performance_check(const std::vector<double>& t, const std::vector<double>& znorm,
                             const std::vector<double>& bnorm, double gamma, double rel_slack) {
    require_dims(t.size() == znorm.size() && t.size() == bnorm.size(), "l2_performance_check: length mismatch");
    L2Check out;
    out.pass = true;
    const double g2 = gamma * gamma;
    for (size_t k = 1; k < t.size(); ++k) {
        const double h = t[k] - t[k - 1];
        out.lhs += 0.5 * h * (znorm[k - 1] * znorm[k - 1] + znorm[k] * znorm[k]);
        out.rhs += 0.5 * h * g2 * (bnorm[k - 1] * bnorm[k - 1] + bnorm[k] * bnorm[k]);
        if (out.pass && out.lhs > out.rhs * (1.0 + rel_slack)) {
            out.pass = false;
            out.first_failure = static_cast<int>(k);
        }
    }
    return out;
}

L2Check l2_performance_check(const Trajectory& traj, double gamma, double rel_slack) {
    if (traj.eta0_norm != 0.0)
        throw L2CheckRefused("l2_performance_check: needs a zero initial controller state");
    std::vector<double> zn, bn;
    for (int k = 0; k < traj.samples(); ++k) {
        zn.push_back(traj.z.col(k).norm());
        bn.push_back(traj.b.col(k).norm());
    }
    return l2_performance_check(traj.t, zn, bn, gamma, rel_slack);
}

double final_window_mean(const std::vector<double>& t, const std::vector<double>& series, double fraction) {
    require_dims(t.size() == series.size() && !t.empty(), "final_window_mean: length mismatch");
    const double start = (1.0 - fraction) * t.back();
    double sum = 0.0;
    int count = 0;
    for (size_t k = 0; k < t.size(); ++k) {
        if (t[k] >= start) {
            sum += series[k];
            ++count;
        }
    }
    return count ? sum / count : 0.0;
}

std::vector<int> switching_samples(const Trajectory& traj, double tol) {
    std::vector<int> out;
    if (traj.x_star.cols() == 0) return out;
    auto active = [&](int k) {
        std::vector<bool> a(static_cast<size_t>(traj.n()));
        for (int i = 0; i < traj.n(); ++i) a[static_cast<size_t>(i)] = traj.x_star(i, k) <= tol;
        return a;
    };
    auto prev = active(0);
    for (int k = 1; k < traj.samples(); ++k) {
        auto cur = active(k);
        if (cur != prev) out.push_back(k);
        prev = std::move(cur);
    }
    return out;
}

double switching_window_peak(const Trajectory& traj, const std::vector<double>& series, double window) {
    require_dims(static_cast<int>(series.size()) == traj.samples(), "switching_window_peak: length mismatch");
    double peak = 0.0;
    for (int s : switching_samples(traj)) {
        const double t0 = traj.t[static_cast<size_t>(s)];
        for (int k = s; k < traj.samples() && traj.t[static_cast<size_t>(k)] <= t0 + window; ++k)
            peak = std::max(peak, series[static_cast<size_t>(k)]);
    }
    return peak;
}

}  // namespace pimaw
