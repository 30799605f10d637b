#include <iostream>

#include "CLI11.hpp"
#include "pimaw/cli.hpp"

int main(int argc, char** argv) {
    using namespace pimaw::cli;
    CLI::App app{"Projected internal-model anti-windup: synthesis, simulation and verification"};
    app.set_version_flag("--version", PIMAW_VERSION);
    app.require_subcommand(1);

    CommandOptions o;
    std::optional<std::uint64_t> seed;
    std::optional<double> dt, gamma, rho;

    auto common = [&](CLI::App* c, bool needs_design) {
        c->add_option("--scenario", o.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
        auto* d = c->add_option("--design", o.design, "Design JSON");
        if (needs_design) d->required();
        c->add_option("--out", o.out, "Output directory")->capture_default_str();
        c->add_option("--seed", seed, "Override the scenario seeds (signal uses seed + 1)");
        c->add_option("--dt", dt, "Override the integration step");
        c->add_option("--gamma", gamma, "Override the performance level");
        c->add_flag("--quiet", o.quiet, "Only print errors");
    };

    auto* synth = app.add_subcommand("synth", "Synthesize and certify K and rho; writes design.json (or --design)");
    common(synth, false);

    auto* sim = app.add_subcommand("simulate", "Simulate one method; writes <out>/<method>.csv");
    common(sim, false);
    sim->add_option("--method", o.method, "pimaw | pimaw-rho0 | opgd")
        ->required()
        ->check(CLI::IsMember({"pimaw", "pimaw-rho0", "opgd"}));
    sim->add_option("--rho", rho, "Anti-windup gain override for method pimaw");

    auto* cmp = app.add_subcommand("compare", "Run all methods; writes CSVs, SVG charts and summary.json");
    common(cmp, false);
    cmp->add_option("--rho", rho, "Anti-windup gain override for method pimaw");

    auto* ver = app.add_subcommand("verify", "Re-check a design against a scenario");
    common(ver, true);
    ver->add_option("--trajectory", o.trajectory, "Trajectory CSV for the L2 prefix check")
        ->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kInputError;
    }
    o.overrides.seed = seed;
    o.overrides.dt = dt;
    o.overrides.gamma = gamma;
    o.rho = rho;

    if (synth->parsed()) return cmd_synth(o, std::cout, std::cerr);
    if (sim->parsed()) return cmd_simulate(o, std::cout, std::cerr);
    if (cmp->parsed()) return cmd_compare(o, std::cout, std::cerr);
    return cmd_verify(o, std::cout, std::cerr);
}
