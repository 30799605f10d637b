#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "pimaw/cli.hpp"

using namespace pimaw;
using namespace pimaw::cli;
namespace fs = std::filesystem;

namespace {

const std::string kScenarios = PIMAW_SCENARIO_DIR;

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("pimaw_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void dump(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

json scalar_scenario(double a, double offset, double t_end) {
    return json{{"n", 1},
                {"hessian", {{"mode", "explicit"}, {"matrix", {{a}}}}},
                {"signal",
                 {{"type", "sinusoid_plus_constant"}, {"omega", 0.25}, {"amp", {0.0}}, {"phase", {0.0}}, {"offset", {offset}}}},
                {"internal_model", {{"poly_coeffs", {1, 0}}}},
                {"gamma", 10},
                {"t_end", t_end}};
}

struct Run {
    int code;
    std::string out, err;
};

template <class F>
Run run(F cmd, const CommandOptions& o) {
    std::ostringstream out, err;
    const int code = cmd(o, out, err);
    return {code, out.str(), err.str()};
}

// Short horizon copy of a shipped scenario.
fs::path short_copy(const std::string& name, const fs::path& dir, double t_end) {
    json j = json::parse(slurp(kScenarios + "/" + name));
    j["t_end"] = t_end;
    const fs::path p = dir / name;
    dump(p, j.dump(2));
    return p;
}

}  // namespace

TEST_CASE("format_double round-trips") {
    for (double v : {0.0, 1.0, -2.5, 0.1, 1e-300, 123456789.123, 3.141592653589793, -0.0}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
}

TEST_CASE("CSV write and parse") {
    Trajectory tr;
    tr.t = {0.0, 0.5};
    tr.x = Mat(2, 2);
    tr.x << 1.0, 0.25, 0.0, 1.0 / 3.0;
    tr.x_star = tr.x;
    tr.z = Mat::Zero(2, 2);
    tr.b = Mat::Ones(2, 2);
    const std::string text = trajectory_csv(tr, {0, 1});
    CHECK(text.rfind("t,err,znorm,bnorm,x_0,x_1\n", 0) == 0);
    CHECK(text.find('\r') == std::string::npos);
    const auto tab = parse_csv(text);
    CHECK(tab.column("x_1")[1] == 1.0 / 3.0);
    CHECK(tab.column("err")[0] == 0.0);
    CHECK(tab.column("bnorm")[1] == std::sqrt(2.0));
    CHECK_THROWS(tab.column("nope"));
    CHECK_THROWS(parse_csv("a,b\n1\n"));
}

TEST_CASE("fnv1a reference values") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("random_orthogonal is orthogonal and seeded") {
    std::mt19937_64 a(4), b(4);
    const Mat Q = random_orthogonal(6, a);
    CHECK((Q.transpose() * Q - Mat::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(Q == random_orthogonal(6, b));
}

TEST_CASE("scenario parsing") {
    const auto s = load_scenario(kScenarios + "/triangular.json");
    CHECK(s.n == 10);
    CHECK(s.lambda_min == 1.0);
    CHECK(s.lambda_max == 10.0);
    CHECK(s.alpha == doctest::Approx(0.1));
    CHECK(s.columns.size() == 10);
    Eigen::SelfAdjointEigenSolver<Mat> es(s.A);
    CHECK(es.eigenvalues().minCoeff() >= 1.0 - 1e-9);
    CHECK(es.eigenvalues().maxCoeff() <= 10.0 + 1e-9);
    CHECK(load_scenario(kScenarios + "/triangular.json").hash == s.hash);

    Overrides ov;
    ov.seed = 9;
    const auto t = load_scenario(kScenarios + "/triangular.json", ov);
    CHECK(t.hash != s.hash);
    CHECK(t.resolved["hessian"]["seed"] == 9);
    CHECK(t.resolved["signal"]["seed"] == 10);

    json bad = scalar_scenario(2, 1, 1);
    bad["colour"] = "red";
    CHECK_THROWS_AS(parse_scenario(bad), ScenarioError);
    json missing = scalar_scenario(2, 1, 1);
    missing.erase("gamma");
    CHECK_THROWS_AS(parse_scenario(missing), ScenarioError);
    json nonsym = scalar_scenario(2, 1, 1);
    nonsym["n"] = 2;
    nonsym["hessian"]["matrix"] = {{2, 1}, {0, 2}};
    CHECK_THROWS_AS(parse_scenario(nonsym), ScenarioError);
}

TEST_CASE("synth: shipped scenario succeeds and round-trips") {
    const auto dir = scratch("synth");
    CommandOptions o;
    o.scenario = kScenarios + "/triangular.json";
    o.out = dir.string();
    o.quiet = true;
    const auto r = run(cmd_synth, o);
    REQUIRE(r.code == kOk);
    REQUIRE(fs::exists(dir / "design.json"));
    const auto d = load_design((dir / "design.json").string());
    CHECK(d.K.size() == 2);
    CHECK(d.rho > 0.0);
    const auto j = json::parse(slurp(dir / "design.json"));
    CHECK(j["provenance"]["scenario_hash"] == hex64(load_scenario(o.scenario).hash));
}

TEST_CASE("synth: infeasible gamma exits 2, bad input exits 1 without output") {
    const auto dir = scratch("synth_fail");
    CommandOptions o;
    o.scenario = kScenarios + "/triangular.json";
    o.out = dir.string();
    o.overrides.gamma = 1e-6;
    const auto r = run(cmd_synth, o);
    CHECK(r.code == kInfeasible);
    CHECK_FALSE(r.err.empty());
    CHECK_FALSE(fs::exists(dir / "design.json"));

    dump(dir / "broken.json", "{\"n\": 3,");
    CommandOptions b;
    b.scenario = (dir / "broken.json").string();
    b.out = (dir / "o").string();
    CHECK(run(cmd_synth, b).code == kInputError);
    CHECK_FALSE(fs::exists(dir / "o" / "design.json"));

    json unknown = scalar_scenario(2, 1, 1);
    unknown["hesian"] = 1;
    dump(dir / "unknown.json", unknown.dump());
    b.scenario = (dir / "unknown.json").string();
    const auto u = run(cmd_synth, b);
    CHECK(u.code == kInputError);
    CHECK(u.err.find("hesian") != std::string::npos);

    b.scenario = (dir / "does_not_exist.json").string();
    CHECK(run(cmd_synth, b).code == kInputError);
}

TEST_CASE("simulate: OP-GD reaches a constant optimum") {
    const auto dir = scratch("opgd");
    dump(dir / "s.json", scalar_scenario(2, -4, 20).dump());
    CommandOptions o;
    o.scenario = (dir / "s.json").string();
    o.out = dir.string();
    o.method = "opgd";
    o.quiet = true;
    REQUIRE(run(cmd_simulate, o).code == kOk);
    const auto tab = read_csv((dir / "opgd.csv").string());
    CHECK(tab.column("err").back() < 1e-6);
    CHECK(tab.column("x_0").back() == doctest::Approx(2.0));
}

TEST_CASE("simulate: P-IMAW with b = 0 stays at zero") {
    const auto dir = scratch("zero");
    dump(dir / "s.json", scalar_scenario(2, 0, 5).dump());
    CommandOptions o;
    o.scenario = (dir / "s.json").string();
    o.out = dir.string();
    o.method = "pimaw";
    o.quiet = true;
    CHECK(run(cmd_simulate, o).code == kInputError);  // no design yet
    REQUIRE(run(cmd_synth, o).code == kOk);
    o.design = (dir / "design.json").string();
    REQUIRE(run(cmd_simulate, o).code == kOk);
    const auto tab = read_csv((dir / "pimaw.csv").string());
    for (double v : tab.column("err")) REQUIRE(v == 0.0);
    for (double v : tab.column("znorm")) REQUIRE(v == 0.0);
}

TEST_CASE("simulate: rejects unknown methods and misplaced --rho") {
    const auto dir = scratch("badmethod");
    dump(dir / "s.json", scalar_scenario(2, 0, 1).dump());
    CommandOptions o;
    o.scenario = (dir / "s.json").string();
    o.out = dir.string();
    o.method = "newton";
    CHECK(run(cmd_simulate, o).code == kInputError);
    o.method = "opgd";
    o.rho = 1.0;
    CHECK(run(cmd_simulate, o).code == kInputError);
}

TEST_CASE("simulate: output is byte-identical across runs") {
    const auto dir = scratch("repeat");
    const auto sc = short_copy("sinusoid.json", dir, 3.0);
    CommandOptions o;
    o.scenario = sc.string();
    o.method = "pimaw";
    o.quiet = true;
    o.out = dir.string();
    REQUIRE(run(cmd_synth, o).code == kOk);
    o.design = (dir / "design.json").string();
    o.out = (dir / "a").string();
    REQUIRE(run(cmd_simulate, o).code == kOk);
    o.out = (dir / "b").string();
    REQUIRE(run(cmd_simulate, o).code == kOk);
    CHECK(slurp(dir / "a" / "pimaw.csv") == slurp(dir / "b" / "pimaw.csv"));
}

TEST_CASE("compare: smoke run writes every artifact") {
    const auto dir = scratch("compare");
    const auto sc = short_copy("triangular.json", dir, 0.1);
    CommandOptions o;
    o.scenario = sc.string();
    o.out = (dir / "out").string();
    const auto r = run(cmd_compare, o);
    REQUIRE(r.code == kOk);
    for (const char* f : {"design.json", "pimaw.csv", "pimaw-rho0.csv", "opgd.csv", "tracking_error.svg",
                          "performance_output.svg", "summary.json"})
        CHECK(fs::exists(dir / "out" / f));
    const auto s = json::parse(slurp(dir / "out" / "summary.json"));
    CHECK(s["methods"].contains("pimaw"));
    CHECK(slurp(dir / "out" / "tracking_error.svg").rfind("<svg", 0) == 0);
}

TEST_CASE("verify: fresh design passes, corrupted and widened designs fail") {
    const auto dir = scratch("verify");
    CommandOptions o;
    o.scenario = kScenarios + "/triangular.json";
    o.out = dir.string();
    o.quiet = true;
    REQUIRE(run(cmd_synth, o).code == kOk);
    o.design = (dir / "design.json").string();
    const auto ok = run(cmd_verify, o);
    CHECK(ok.code == kOk);

    json d = json::parse(slurp(dir / "design.json"));
    d["K"][0] = -d["K"][0].get<double>();
    dump(dir / "flipped.json", d.dump());
    o.design = (dir / "flipped.json").string();
    const auto bad = run(cmd_verify, o);
    CHECK(bad.code == kVerificationFailed);
    CHECK(bad.err.find("FAIL hurwitz") != std::string::npos);

    // A design certified on [1, 10] checked against a scenario on [1, 400].
    json wide = json::parse(slurp(kScenarios + "/triangular.json"));
    wide["hessian"]["eig_range"] = {1, 400};
    dump(dir / "wide.json", wide.dump());
    CommandOptions w = o;
    w.scenario = (dir / "wide.json").string();
    w.design = (dir / "design.json").string();
    const auto wr = run(cmd_verify, w);
    CHECK(wr.code == kVerificationFailed);
    CHECK(wr.err.find("FAIL") != std::string::npos);
}
