#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "pimaw/cli.hpp"

namespace pimaw::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kSwitchWindow = 5.0;  // seconds after each active-set change
constexpr int kInteriorSamples = 50;

void write_file(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ScenarioError("cannot write '" + path.string() + "'");
    f << bytes;
    if (!f) throw ScenarioError("write failed for '" + path.string() + "'");
}

// Runs `body`, mapping exceptions onto exit codes.
template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const SynthesisInfeasible& e) {
        err << "infeasible: " << e.what() << " [best margin " << e.best_margin() << "]\n";
        return kInfeasible;
    } catch (const json::exception& e) {
        err << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::exception& e) {
        err << "input error: " << e.what() << "\n";
        return kInputError;
    }
}

std::string design_out_path(const CommandOptions& o) {
    return o.design.empty() ? (fs::path(o.out) / "design.json").string() : o.design;
}

bool same_model(const std::vector<double>& a, const std::vector<double>& b) { return a == b; }

json l2_json(const std::vector<double>& t, const std::vector<double>& zn, const std::vector<double>& bn, double gamma,
             bool zero_init) {
    if (!zero_init) return {{"skipped", "nonzero initial controller state"}};
    const auto c = l2_performance_check(t, zn, bn, gamma);
    json j = {{"int_z_sq", c.lhs}, {"gamma_sq_int_b_sq", c.rhs}, {"pass", c.pass}};
    j["first_failure_t"] = c.first_failure >= 0 ? json(t[static_cast<size_t>(c.first_failure)]) : json(nullptr);
    return j;
}

double trapezoid_sq(const std::vector<double>& t, const std::vector<double>& v) {
    double s = 0.0;
    for (size_t k = 1; k < t.size(); ++k) s += 0.5 * (t[k] - t[k - 1]) * (v[k] * v[k] + v[k - 1] * v[k - 1]);
    return s;
}

}  // namespace

const std::vector<std::string>& method_names() {
    static const std::vector<std::string> names{"pimaw", "pimaw-rho0", "opgd"};
    return names;
}

Trajectory run_method(const ScenarioSpec& spec, const std::optional<ControllerDesign>& design,
                      const std::string& method, std::optional<double> rho_override) {
    if (method == "opgd") {
        auto tr = simulate_opgd(spec.simulator_scenario(std::nullopt));
        tr.method = method;
        return tr;
    }
    if (method != "pimaw" && method != "pimaw-rho0")
        throw ScenarioError("unknown method '" + method + "' (expected pimaw, pimaw-rho0 or opgd)");
    if (!design) throw ScenarioError("method '" + method + "' needs a design (--design)");
    if (!same_model(design->model.d_coeffs, spec.internal_model))
        throw ScenarioError("design internal model does not match the scenario's internal_model");
    const auto sc = spec.simulator_scenario(LoopDesign{design->model, design->K, design->rho});
    auto tr = method == "pimaw" ? simulate_pimaw(sc, rho_override) : simulate_pimaw(sc, 0.0);
    tr.method = method;
    return tr;
}

int cmd_synth(const CommandOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto spec = load_scenario(o.scenario, o.overrides);
        const auto d = synthesize(spec);
        const auto path = design_out_path(o);
        write_file(path, design_to_json(d, spec).dump(2) + "\n");
        if (!o.quiet) {
            out << "design certified: K = [" << d.K << "], rho = " << d.rho << ", gamma = " << d.gamma
                << ", eps_decay = " << d.gain.eps_decay << "\n";
            out << "wrote " << path << "\n";
        }
        return static_cast<int>(kOk);
    });
}

int cmd_simulate(const CommandOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto spec = load_scenario(o.scenario, o.overrides);
        if (o.method.empty()) throw ScenarioError("simulate needs --method");
        std::optional<ControllerDesign> design;
        if (!o.design.empty()) design = load_design(o.design);
        if (o.rho && o.method != "pimaw") throw ScenarioError("--rho applies to method pimaw only");
        const auto tr = run_method(spec, design, o.method, o.rho);
        const auto path = fs::path(o.out) / (o.method + ".csv");
        write_file(path, trajectory_csv(tr, spec.columns));
        if (tr.diverged) {
            err << "diverged: method " << o.method << " blew up at t = " << tr.blowup_time << "\n";
            return static_cast<int>(kDiverged);
        }
        if (!o.quiet) out << "wrote " << path.string() << " (" << tr.samples() << " samples)\n";
        return static_cast<int>(kOk);
    });
}

int cmd_compare(const CommandOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto spec = load_scenario(o.scenario, o.overrides);
        std::optional<ControllerDesign> design;
        std::string design_source = "file";
        if (!o.design.empty()) {
            design = load_design(o.design);
        } else {
            design = synthesize(spec);
            design_source = "synthesized";
        }
        const fs::path dir(o.out);
        if (design_source == "synthesized") write_file(dir / "design.json", design_to_json(*design, spec).dump(2) + "\n");

        // The three runs share nothing mutable.
        std::vector<std::future<Trajectory>> jobs;
        for (const auto& m : method_names())
            jobs.push_back(std::async(std::launch::async, [&, m] {
                return run_method(spec, design, m, m == "pimaw" ? o.rho : std::nullopt);
            }));
        std::vector<Trajectory> trajs;
        for (auto& j : jobs) trajs.push_back(j.get());

        for (const auto& tr : trajs) write_file(dir / (tr.method + ".csv"), trajectory_csv(tr, spec.columns));

        // Everything below is computed from the files just written.
        const bool zero_init = spec.eta0.isZero(0.0);
        const auto switches = switching_samples(trajs.front());
        std::vector<ChartSeries> err_series, z_series;
        json methods = json::object();
        bool any_diverged = false;
        for (const auto& tr : trajs) {
            const auto tab = read_csv((dir / (tr.method + ".csv")).string());
            const auto& t = tab.column("t");
            const auto& e = tab.column("err");
            const auto& zn = tab.column("znorm");
            const auto& bn = tab.column("bnorm");
            err_series.push_back({tr.method, t, e});
            z_series.push_back({tr.method, t, zn});

            json mj;
            mj["final_window_mean_error"] = final_window_mean(t, e, 0.2);
            mj["peak_error"] = e.empty() ? 0.0 : *std::max_element(e.begin(), e.end());
            mj["switching_window_peak_error"] = switching_window_peak(trajs.front(), e, kSwitchWindow);
            mj["int_z_sq"] = trapezoid_sq(t, zn);
            mj["int_b_sq"] = trapezoid_sq(t, bn);
            mj["l2_check"] = l2_json(t, zn, bn, design->gamma, zero_init || tr.method == "opgd");
            mj["certified"] = tr.method == "pimaw" && !o.rho;
            mj["rho"] = tr.method == "pimaw"        ? json(o.rho.value_or(design->rho))
                        : tr.method == "pimaw-rho0" ? json(0.0)
                                                    : json(nullptr);
            mj["diverged"] = tr.diverged;
            mj["blowup_time"] = tr.diverged ? json(tr.blowup_time) : json(nullptr);
            any_diverged = any_diverged || tr.diverged;
            methods[tr.method] = mj;
        }

        ChartOptions eo;
        eo.title = "Tracking error ||x(t) - x*(t)||";
        eo.y_label = "error";
        write_file(dir / "tracking_error.svg", render_svg(err_series, eo));
        ChartOptions zo;
        zo.title = "Performance output ||z(t)||";
        zo.y_label = "||z||";
        write_file(dir / "performance_output.svg", render_svg(z_series, zo));

        json summary;
        summary["scenario_hash"] = hex64(spec.hash);
        summary["methods"] = methods;
        summary["switching"] = {{"count", switches.size()}, {"window", kSwitchWindow}};
        summary["design"] = {{"source", design_source},
                             {"K", std::vector<double>(design->K.data(), design->K.data() + design->K.size())},
                             {"rho", design->rho},
                             {"gamma", design->gamma},
                             {"lambda_min", design->lambda_min},
                             {"lambda_max", design->lambda_max}};
        summary["provenance"] = {{"version", PIMAW_VERSION},
                                 {"scenario", spec.resolved},
                                 {"final_window_fraction", 0.2},
                                 {"l2_rel_slack", 1e-3},
                                 {"rho_override", o.rho ? json(*o.rho) : json(nullptr)}};
        write_file(dir / "summary.json", summary.dump(2) + "\n");

        if (!o.quiet) {
            out << std::left << std::setw(12) << "method" << std::setw(16) << "final-mean-err" << std::setw(16)
                << "switch-peak" << std::setw(16) << "int|z|^2" << "L2\n";
            for (const auto& m : method_names()) {
                const auto& mj = methods[m];
                std::string l2 = mj["l2_check"].contains("pass") ? (mj["l2_check"]["pass"].get<bool>() ? "pass" : "FAIL")
                                                                 : "skipped";
                out << std::setw(12) << m << std::setw(16) << mj["final_window_mean_error"].get<double>()
                    << std::setw(16) << mj["switching_window_peak_error"].get<double>() << std::setw(16)
                    << mj["int_z_sq"].get<double>() << l2 << "\n";
            }
            out << "wrote " << dir.string() << "\n";
        }
        if (any_diverged) {
            err << "diverged: at least one method blew up (see summary.json)\n";
            return static_cast<int>(kDiverged);
        }
        return static_cast<int>(kOk);
    });
}

int cmd_verify(const CommandOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto spec = load_scenario(o.scenario, o.overrides);
        if (o.design.empty()) throw ScenarioError("verify needs --design");
        const auto d = load_design(o.design);
        std::optional<CsvTable> traj;
        if (!o.trajectory.empty()) traj = read_csv(o.trajectory);

        std::vector<std::string> failures;
        auto report = [&](bool ok, const std::string& item, const std::string& detail) {
            if (!ok) failures.push_back(item + ": " + detail);
            if (!o.quiet || !ok) (ok ? out : err) << (ok ? "PASS " : "FAIL ") << item << ": " << detail << "\n";
        };
        auto str = [](double v) {
            std::ostringstream s;
            s << std::setprecision(6) << v;
            return s.str();
        };

        report(same_model(d.model.d_coeffs, spec.internal_model), "internal_model",
               "design and scenario internal models must be identical");

        // Sweep over the scenario's eigenvalue range.
        std::vector<double> lams{spec.lambda_min, spec.lambda_max};
        for (double l : interior_samples(spec.lambda_min, spec.lambda_max, kInteriorSamples)) lams.push_back(l);
        if (d.model.d_coeffs == spec.internal_model) {
            const auto h = verify_hurwitz(d.model, d.K, lams);
            size_t worst = 0;
            for (size_t i = 0; i < h.max_real.size(); ++i)
                if (h.max_real[i] > h.max_real[worst]) worst = i;
            report(h.pass, "hurwitz",
                   "max Re(eig(F + lambda H K)) = " + str(h.max_real[worst]) + " at lambda = " + str(h.lambdas[worst]));

            double worst_m = -std::numeric_limits<double>::infinity(), worst_l = 0.0;
            for (double l : lams) {
                const double mg = lmi::eig_max_symmetric(
                    assemble_antiwindup_lmi(d.model, d.K, l, d.gamma, d.antiwindup.Qbar, d.antiwindup.delta, d.antiwindup.xi));
                if (mg > worst_m) worst_m = mg, worst_l = l;
            }
            report(worst_m < 0.0, "performance_lmi",
                   "max eigenvalue " + str(worst_m) + " at lambda = " + str(worst_l));
            const double qmin =
                Eigen::SelfAdjointEigenSolver<Mat>(d.antiwindup.Qbar, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
            report(qmin > 0.0 && d.antiwindup.delta > 0.0, "lyapunov_positivity",
                   "min eig(Qbar) = " + str(qmin) + ", delta = " + str(d.antiwindup.delta));
            const double rho = d.antiwindup.xi / d.antiwindup.delta;
            report(std::abs(rho - d.rho) <= 1e-9 * std::max(1.0, std::abs(d.rho)), "rho",
                   "xi / delta = " + str(rho) + ", recorded rho = " + str(d.rho));
        }
        if (traj) {
            const auto c = l2_performance_check(traj->column("t"), traj->column("znorm"), traj->column("bnorm"), d.gamma);
            std::string detail = "int |z|^2 = " + str(c.lhs) + ", gamma^2 int |b|^2 = " + str(c.rhs);
            if (c.first_failure >= 0) detail += ", first violated at t = " + str(traj->column("t")[static_cast<size_t>(c.first_failure)]);
            report(c.pass, "l2_prefix", detail);
        }
        if (!failures.empty()) return static_cast<int>(kVerificationFailed);
        if (!o.quiet) out << "all checks passed\n";
        return static_cast<int>(kOk);
    });
}

}  // namespace pimaw::cli
