#include <charconv>
#include <fstream>
#include <sstream>

#include "pimaw/cli.hpp"

namespace pimaw::cli {

namespace {

json vec_json(const Eigen::Ref<const Vec>& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json row_json(const RowVec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json matrix_json(const Mat& M) {
    json rows = json::array();
    for (int i = 0; i < M.rows(); ++i) rows.push_back(vec_json(M.row(i).transpose()));
    return rows;
}

[[noreturn]] void bad_design(const std::string& msg) { throw ScenarioError("design: " + msg); }

double num(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) bad_design(std::string("missing numeric '") + key + "'");
    return j.at(key).get<double>();
}

std::vector<double> nums(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array()) bad_design(std::string("missing array '") + key + "'");
    std::vector<double> out;
    for (const auto& v : j.at(key)) {
        if (!v.is_number()) bad_design(std::string("non-numeric entry in '") + key + "'");
        out.push_back(v.get<double>());
    }
    return out;
}

Mat square(const json& j, const char* key, int m) {
    if (!j.contains(key) || !j.at(key).is_array() || static_cast<int>(j.at(key).size()) != m)
        bad_design(std::string("'") + key + "' must be " + std::to_string(m) + " x " + std::to_string(m));
    Mat M(m, m);
    for (int i = 0; i < m; ++i) {
        const auto& row = j.at(key)[static_cast<size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != m) bad_design(std::string("'") + key + "' has a bad row");
        for (int c = 0; c < m; ++c) {
            if (!row[static_cast<size_t>(c)].is_number()) bad_design(std::string("'") + key + "' has a non-number");
            M(i, c) = row[static_cast<size_t>(c)].get<double>();
        }
    }
    return M;
}

}  // namespace

ControllerDesign synthesize(const ScenarioSpec& spec) {
    ControllerDesign d;
    d.model = companion_realization(spec.internal_model);
    d.lambda_min = spec.lambda_min;
    d.lambda_max = spec.lambda_max;
    d.gamma = spec.gamma;

    StabilizationOptions sopt;
    sopt.eps_decay = spec.eps_decay;
    d.gain = synthesize_K(d.model, spec.lambda_min, spec.lambda_max, sopt);
    d.K = d.gain.K;

    const auto aw = solve_antiwindup(d.model, d.K, spec.lambda_min, spec.lambda_max, spec.gamma);
    if (!aw.design) {
        std::ostringstream os;
        os << "anti-windup LMI is " << lmi::to_string(aw.status) << " at gamma = " << spec.gamma << " (best margin "
           << aw.best_margin << ")";
        throw SynthesisInfeasible(os.str(), d.gain.eps_decay, aw.best_margin);
    }
    d.antiwindup = *aw.design;
    d.rho = d.antiwindup.rho;
    return d;
}

json design_to_json(const ControllerDesign& d, const ScenarioSpec& spec) {
    json j;
    j["format"] = "pimaw-design/1";
    j["internal_model"] = {{"poly_coeffs", d.model.d_coeffs}};
    j["lambda_min"] = d.lambda_min;
    j["lambda_max"] = d.lambda_max;
    j["K"] = row_json(d.K);
    j["rho"] = d.rho;
    j["gamma"] = d.gamma;
    j["eps_decay"] = d.gain.eps_decay;
    j["stabilization"] = {{"W", matrix_json(d.gain.W)}, {"Z", row_json(d.gain.Z)}};
    j["antiwindup"] = {
        {"Qbar", matrix_json(d.antiwindup.Qbar)}, {"delta", d.antiwindup.delta}, {"xi", d.antiwindup.xi}};

    const auto& h = d.gain.hurwitz;
    const auto& c = d.antiwindup.cert;
    j["certificates"] = {
        {"stabilization",
         {{"lmi_margins", d.gain.lmi_margins},
          {"hurwitz", {{"lambdas", h.lambdas}, {"max_real", h.max_real}, {"threshold", h.threshold}}}}},
        {"antiwindup",
         {{"margin_lambda_min", c.margin_lambda_min},
          {"margin_lambda_max", c.margin_lambda_max},
          {"q_min_eig", c.q_min_eig},
          {"solver_iterations", c.solver_iterations},
          {"rho_near_zero", c.rho_near_zero}}}};

    const lmi::SolverConfig solver{};
    j["provenance"] = {{"version", PIMAW_VERSION},
                       {"scenario_hash", hex64(spec.hash)},
                       {"scenario", spec.resolved},
                       {"solver", {{"max_iter", solver.max_iter}, {"tol_feas", solver.tol_feas}}}};
    return j;
}

ControllerDesign design_from_json(const json& j) {
    if (!j.is_object()) bad_design("expected an object");
    if (!j.contains("format") || j.at("format") != "pimaw-design/1") bad_design("unsupported or missing 'format'");
    if (!j.contains("internal_model") || !j.at("internal_model").is_object()) bad_design("missing 'internal_model'");

    ControllerDesign d;
    try {
        d.model = companion_realization(nums(j.at("internal_model"), "poly_coeffs"));
    } catch (const ScenarioError&) {
        throw;
    } catch (const std::exception& e) {
        bad_design(std::string("internal_model: ") + e.what());
    }
    const int m = d.model.m;
    d.lambda_min = num(j, "lambda_min");
    d.lambda_max = num(j, "lambda_max");
    if (!(d.lambda_min > 0.0) || !(d.lambda_min <= d.lambda_max)) bad_design("need 0 < lambda_min <= lambda_max");
    const auto K = nums(j, "K");
    if (static_cast<int>(K.size()) != m) bad_design("K must have " + std::to_string(m) + " entries");
    d.K = Eigen::Map<const RowVec>(K.data(), m);
    d.rho = num(j, "rho");
    d.gamma = num(j, "gamma");
    if (!(d.gamma > 0.0)) bad_design("gamma must be positive");
    d.gain.K = d.K;
    d.gain.eps_decay = num(j, "eps_decay");

    if (!j.contains("antiwindup") || !j.at("antiwindup").is_object()) bad_design("missing 'antiwindup'");
    const auto& aw = j.at("antiwindup");
    d.antiwindup.Qbar = square(aw, "Qbar", m);
    d.antiwindup.delta = num(aw, "delta");
    d.antiwindup.xi = num(aw, "xi");
    d.antiwindup.gamma = d.gamma;
    d.antiwindup.rho = d.rho;
    return d;
}

ControllerDesign load_design(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError("cannot open design file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ScenarioError("design '" + path + "' is not valid JSON: " + e.what());
    }
    return design_from_json(doc);
}

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string trajectory_csv(const Trajectory& traj, const std::vector<int>& x_columns) {
    const auto err = tracking_error(traj);
    std::string s = "t,err,znorm,bnorm";
    for (int i : x_columns) s += ",x_" + std::to_string(i);
    s += '\n';
    for (int k = 0; k < traj.samples(); ++k) {
        s += format_double(traj.t[static_cast<size_t>(k)]);
        s += ',';
        s += format_double(err[static_cast<size_t>(k)]);
        s += ',';
        s += format_double(traj.z.col(k).norm());
        s += ',';
        s += format_double(traj.b.col(k).norm());
        for (int i : x_columns) {
            s += ',';
            s += format_double(traj.x(i, k));
        }
        s += '\n';
    }
    return s;
}

const std::vector<double>& CsvTable::column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return columns[i];
    throw ScenarioError("csv: no column named '" + name + "'");
}

CsvTable parse_csv(const std::string& text) {
    CsvTable tab;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.empty()) throw ScenarioError("csv: missing header");
    {
        std::istringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) tab.header.push_back(cell);
    }
    tab.columns.assign(tab.header.size(), {});
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        size_t col = 0, pos = 0;
        while (pos <= line.size()) {
            const size_t end = std::min(line.find(',', pos), line.size());
            if (col >= tab.header.size()) throw ScenarioError("csv: too many fields on line " + std::to_string(row));
            double v = 0.0;
            const auto r = std::from_chars(line.data() + pos, line.data() + end, v);
            if (r.ec != std::errc() || r.ptr != line.data() + end)
                throw ScenarioError("csv: bad number on line " + std::to_string(row));
            tab.columns[col++].push_back(v);
            pos = end + 1;
        }
        if (col != tab.header.size()) throw ScenarioError("csv: too few fields on line " + std::to_string(row));
    }
    return tab;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

}  // namespace pimaw::cli
