#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pimaw/simulator.hpp"
#include "pimaw/synthesis.hpp"
#include "json.hpp"

namespace pimaw::cli {

using json = nlohmann::json;

enum ExitCode : int {
    kOk = 0,
    kInputError = 1,
    kInfeasible = 2,
    kDiverged = 3,
    kVerificationFailed = 4,
};

/// Schema violations and unreadable files; maps to exit code 1.
class ScenarioError : public InvalidInput {
   public:
    using InvalidInput::InvalidInput;
};

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

/// Command-line values that take precedence over the scenario file.
struct Overrides {
    std::optional<std::uint64_t> seed;  // hessian.seed := seed, signal.seed := seed + 1
    std::optional<double> dt;
    std::optional<double> gamma;
};

/// A scenario with every default filled in and every random field drawn.
struct ScenarioSpec {
    json resolved;  // the scenario after defaults and overrides, echoed as provenance
    std::uint64_t hash = 0;
    int n = 0;
    double lambda_min = 0.0, lambda_max = 0.0;
    Mat A;
    std::optional<SignalSource> signal;
    std::vector<double> internal_model;  // d(s) coefficients, descending, monic
    double gamma = 0.0;
    double alpha = 0.0;
    double t_end = 0.0;
    double dt = 0.0;
    double eps_decay = 0.5;
    Vec eta0, q0;
    int decimation = 10;
    std::vector<int> columns;  // x indices written to CSV

    QuadraticProblem problem() const;
    /// Simulator inputs; `design` may be empty for OP-GD.
    Scenario simulator_scenario(const std::optional<LoopDesign>& design) const;
};

/// Validates `doc` against the scenario schema (unknown keys are errors) and
/// materializes the problem. Throws ScenarioError.
ScenarioSpec parse_scenario(const json& doc, const Overrides& ov = {});
ScenarioSpec load_scenario(const std::string& path, const Overrides& ov = {});

/// Q from the QR factorization of a seeded standard-normal n x n matrix,
/// columns flipped so diag(R) > 0.
Mat random_orthogonal(int n, std::mt19937_64& rng);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t v);

// ---------------------------------------------------------------------------
// Design records
// ---------------------------------------------------------------------------

/// Step 1 and Step 2 for the scenario's internal model, eigenvalue range and
/// gamma. Throws SynthesisInfeasible when either step fails.
ControllerDesign synthesize(const ScenarioSpec& spec);

json design_to_json(const ControllerDesign& d, const ScenarioSpec& spec);
ControllerDesign design_from_json(const json& doc);
ControllerDesign load_design(const std::string& path);

// ---------------------------------------------------------------------------
// CSV and SVG
// ---------------------------------------------------------------------------

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    const std::vector<double>& column(const std::string& name) const;
};

/// Columns t, err, znorm, bnorm, then x_i for each requested index.
std::string trajectory_csv(const Trajectory& traj, const std::vector<int>& x_columns);
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);

struct ChartSeries {
    std::string label;
    std::vector<double> x, y;
};

struct ChartOptions {
    std::string title;
    std::string x_label = "t [s]";
    std::string y_label;
    bool log_y = true;
    int width = 800;
    int height = 450;
};

std::string render_svg(const std::vector<ChartSeries>& series, const ChartOptions& opts);

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct CommandOptions {
    std::string scenario;
    std::string design;
    std::string method;      // simulate: pimaw | pimaw-rho0 | opgd
    std::string out = ".";
    std::string trajectory;  // verify: optional CSV for the L2 prefix check
    std::optional<double> rho;
    Overrides overrides;
    bool quiet = false;
};

/// Each command returns an ExitCode and never throws; diagnostics go to `err`.
int cmd_synth(const CommandOptions& o, std::ostream& out, std::ostream& err);
int cmd_simulate(const CommandOptions& o, std::ostream& out, std::ostream& err);
int cmd_compare(const CommandOptions& o, std::ostream& out, std::ostream& err);
int cmd_verify(const CommandOptions& o, std::ostream& out, std::ostream& err);

/// Method names accepted by cmd_simulate, in compare order.
const std::vector<std::string>& method_names();

/// Runs one method on the scenario. rho_override applies to "pimaw" only.
Trajectory run_method(const ScenarioSpec& spec, const std::optional<ControllerDesign>& design,
                      const std::string& method, std::optional<double> rho_override = std::nullopt);

}  // namespace pimaw::cli
