#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "pimaw/cli.hpp"

namespace py = pybind11;
using namespace pimaw;

namespace {

py::tuple run_command(int (*cmd)(const cli::CommandOptions&, std::ostream&, std::ostream&), const std::string& scenario,
                      const std::string& out, const std::string& design, const std::string& method,
                      const std::string& trajectory, std::optional<double> rho, std::optional<std::uint64_t> seed,
                      std::optional<double> dt, std::optional<double> gamma) {
    cli::CommandOptions o;
    o.scenario = scenario;
    o.out = out;
    o.design = design;
    o.method = method;
    o.trajectory = trajectory;
    o.rho = rho;
    o.overrides = {seed, dt, gamma};
    o.quiet = true;
    std::ostringstream so, se;
    int code;
    {
        py::gil_scoped_release release;
        code = cmd(o, so, se);
    }
    return py::make_tuple(code, so.str(), se.str());
}

py::dict l2_dict(const L2Check& c) {
    py::dict d;
    d["lhs"] = c.lhs;
    d["rhs"] = c.rhs;
    d["pass"] = c.pass;
    d["first_failure"] = c.first_failure;
    return d;
}

}  // namespace

PYBIND11_MODULE(_pimaw, m) {
    m.doc() = "Projected internal-model anti-windup loops for online nonnegative quadratic programs";

    static py::exception<InvalidInput> invalid(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<SynthesisInfeasible>(m, "SynthesisInfeasible", PyExc_RuntimeError);
    py::register_exception<KinkProximity>(m, "KinkProximity", PyExc_ArithmeticError);
    py::register_exception<L2CheckRefused>(m, "L2CheckRefused", PyExc_RuntimeError);
    py::register_exception<cli::ScenarioError>(m, "ScenarioError", invalid.ptr());

    // core
    m.def(
        "symmetric_eigendecomposition",
        [](const Mat& A) {
            auto e = symmetric_eigendecomposition(A);
            return py::make_tuple(e.values, e.V);
        },
        py::arg("A"), "Jacobi eigendecomposition; returns (ascending eigenvalues, V).");

    py::class_<ExosystemModel>(m, "ExosystemModel")
        .def_readonly("m", &ExosystemModel::m)
        .def_readonly("d_coeffs", &ExosystemModel::d_coeffs)
        .def_readonly("F", &ExosystemModel::F)
        .def_readonly("H_col", &ExosystemModel::H_col)
        .def_readonly("H_row", &ExosystemModel::H_row)
        .def("__repr__", [](const ExosystemModel& e) { return "<ExosystemModel m=" + std::to_string(e.m) + ">"; });

    m.def(
        "companion_realization", [](const std::vector<double>& d) { return companion_realization(d); },
        py::arg("d_coeffs"));
    m.def("characteristic_polynomial", &characteristic_polynomial, py::arg("F"));
    m.def("project_nonneg", &project_nonneg, py::arg("v"));
    m.def(
        "phi", [](const Mat& V, const Vec& u) { return phi(Orthogonal::checked(V), u); }, py::arg("V"), py::arg("u"));
    m.def(
        "phi_jacobian", [](const Mat& V, const Vec& u) { return phi_jacobian(Orthogonal::checked(V), u); },
        py::arg("V"), py::arg("u"));

    // qp
    py::class_<KktPoint>(m, "KktPoint")
        .def_readonly("x_star", &KktPoint::x_star)
        .def_readonly("mu_star", &KktPoint::mu_star)
        .def_property_readonly("residual", [](const KktPoint& p) { return p.residuals.max(); });
    m.def(
        "solve_nonneg_qp", [](const Mat& A, const Vec& b) { return solve_nonneg_qp(A, b); }, py::arg("A"),
        py::arg("b"));
    m.def("brute_force_qp", &brute_force_qp, py::arg("A"), py::arg("b"));

    // synthesis
    py::class_<GainDesign>(m, "GainDesign")
        .def_readonly("K", &GainDesign::K)
        .def_readonly("eps_decay", &GainDesign::eps_decay)
        .def_readonly("lmi_margins", &GainDesign::lmi_margins);
    m.def(
        "synthesize_K",
        [](const ExosystemModel& model, double lmin, double lmax, double eps) {
            StabilizationOptions o;
            o.eps_decay = eps;
            return synthesize_K(model, lmin, lmax, o);
        },
        py::arg("model"), py::arg("lambda_min"), py::arg("lambda_max"), py::arg("eps_decay") = 0.5);

    py::class_<AntiWindupDesign>(m, "AntiWindupDesign")
        .def_readonly("Qbar", &AntiWindupDesign::Qbar)
        .def_readonly("delta", &AntiWindupDesign::delta)
        .def_readonly("xi", &AntiWindupDesign::xi)
        .def_readonly("rho", &AntiWindupDesign::rho)
        .def_readonly("gamma", &AntiWindupDesign::gamma)
        .def_property_readonly("vertex_margins", [](const AntiWindupDesign& d) {
            return py::make_tuple(d.cert.margin_lambda_min, d.cert.margin_lambda_max);
        });
    m.def(
        "solve_antiwindup",
        [](const ExosystemModel& model, const RowVec& K, double lmin, double lmax, double gamma) {
            return solve_antiwindup(model, K, lmin, lmax, gamma).design;
        },
        py::arg("model"), py::arg("K"), py::arg("lambda_min"), py::arg("lambda_max"), py::arg("gamma"),
        "Certified anti-windup design, or None when the LMIs are infeasible.");
    m.def("assemble_antiwindup_lmi", &assemble_antiwindup_lmi, py::arg("model"), py::arg("K"), py::arg("lmbda"),
          py::arg("gamma"), py::arg("Qbar"), py::arg("delta"), py::arg("xi"));

    py::class_<ControllerDesign>(m, "ControllerDesign")
        .def_readonly("model", &ControllerDesign::model)
        .def_readonly("K", &ControllerDesign::K)
        .def_readonly("rho", &ControllerDesign::rho)
        .def_readonly("gamma", &ControllerDesign::gamma)
        .def_readonly("lambda_min", &ControllerDesign::lambda_min)
        .def_readonly("lambda_max", &ControllerDesign::lambda_max);

    // simulator
    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("method", &Trajectory::method)
        .def_readonly("t", &Trajectory::t)
        .def_readonly("x", &Trajectory::x)
        .def_readonly("y_c", &Trajectory::y_c)
        .def_readonly("w", &Trajectory::w)
        .def_readonly("u", &Trajectory::u)
        .def_readonly("b", &Trajectory::b)
        .def_readonly("z", &Trajectory::z)
        .def_readonly("x_star", &Trajectory::x_star)
        .def_readonly("diverged", &Trajectory::diverged)
        .def_readonly("blowup_time", &Trajectory::blowup_time)
        .def_property_readonly("tracking_error", [](const Trajectory& t) { return tracking_error(t); });
    m.def(
        "l2_performance_check", [](const Trajectory& t, double gamma) { return l2_dict(l2_performance_check(t, gamma)); },
        py::arg("trajectory"), py::arg("gamma"));
    m.def("final_window_mean", &final_window_mean, py::arg("t"), py::arg("series"), py::arg("fraction") = 0.2);

    // cli
    py::class_<cli::ScenarioSpec>(m, "ScenarioSpec")
        .def_readonly("n", &cli::ScenarioSpec::n)
        .def_readonly("A", &cli::ScenarioSpec::A)
        .def_readonly("lambda_min", &cli::ScenarioSpec::lambda_min)
        .def_readonly("lambda_max", &cli::ScenarioSpec::lambda_max)
        .def_readonly("gamma", &cli::ScenarioSpec::gamma)
        .def_readonly("internal_model", &cli::ScenarioSpec::internal_model)
        .def_property_readonly("hash", [](const cli::ScenarioSpec& s) { return cli::hex64(s.hash); })
        .def_property_readonly("resolved_json", [](const cli::ScenarioSpec& s) { return s.resolved.dump(); });
    m.def(
        "load_scenario",
        [](const std::string& path, std::optional<std::uint64_t> seed, std::optional<double> dt,
           std::optional<double> gamma) { return cli::load_scenario(path, {seed, dt, gamma}); },
        py::arg("path"), py::arg("seed") = py::none(), py::arg("dt") = py::none(), py::arg("gamma") = py::none());
    m.def(
        "parse_scenario", [](const std::string& text) { return cli::parse_scenario(cli::json::parse(text)); },
        py::arg("json_text"));
    m.def("synthesize", &cli::synthesize, py::arg("spec"), py::call_guard<py::gil_scoped_release>());
    m.def("load_design", &cli::load_design, py::arg("path"));
    m.def(
        "run_method",
        [](const cli::ScenarioSpec& spec, std::optional<ControllerDesign> d, const std::string& method,
           std::optional<double> rho) {
            py::gil_scoped_release release;
            return cli::run_method(spec, d, method, rho);
        },
        py::arg("spec"), py::arg("design"), py::arg("method"), py::arg("rho") = py::none());
    m.def("method_names", &cli::method_names);

    const auto kw = [](auto cmd) {
        return [cmd](const std::string& scenario, const std::string& out, const std::string& design,
                     const std::string& method, const std::string& trajectory, std::optional<double> rho,
                     std::optional<std::uint64_t> seed, std::optional<double> dt, std::optional<double> gamma) {
            return run_command(cmd, scenario, out, design, method, trajectory, rho, seed, dt, gamma);
        };
    };
#define PIMAW_CMD(name, fn)                                                                                          \
    m.def(name, kw(fn), py::arg("scenario"), py::arg("out") = ".", py::arg("design") = "", py::arg("method") = "", \
          py::arg("trajectory") = "", py::arg("rho") = py::none(), py::arg("seed") = py::none(),                    \
          py::arg("dt") = py::none(), py::arg("gamma") = py::none(), "Returns (exit_code, stdout, stderr).")
    PIMAW_CMD("cmd_synth", &cli::cmd_synth);
    PIMAW_CMD("cmd_simulate", &cli::cmd_simulate);
    PIMAW_CMD("cmd_compare", &cli::cmd_compare);
    PIMAW_CMD("cmd_verify", &cli::cmd_verify);
#undef PIMAW_CMD

    m.attr("__version__") = PIMAW_VERSION;
}
