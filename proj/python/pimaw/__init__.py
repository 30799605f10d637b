"""Projected internal-model anti-windup loops for online nonnegative quadratic programs."""

from ._pimaw import (
    ControllerDesign,
    ExosystemModel,
    InvalidInput,
    KinkProximity,
    L2CheckRefused,
    ScenarioError,
    SynthesisInfeasible,
    Trajectory,
    __version__,
    assemble_antiwindup_lmi,
    brute_force_qp,
    characteristic_polynomial,
    cmd_compare,
    cmd_simulate,
    cmd_synth,
    cmd_verify,
    companion_realization,
    final_window_mean,
    l2_performance_check,
    load_design,
    load_scenario,
    method_names,
    parse_scenario,
    phi,
    phi_jacobian,
    project_nonneg,
    run_method,
    solve_antiwindup,
    solve_nonneg_qp,
    symmetric_eigendecomposition,
    synthesize,
    synthesize_K,
)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_DIVERGED = 3
EXIT_VERIFICATION_FAILED = 4
