"""Non-Bayesian social learning on time-varying random digraphs."""

from .chains import (
    ChainSpec,
    backward_product,
    chain_from_dict,
    chain_matrix_at,
    diffusion_augmented_pair,
    erdos_renyi_sample,
    inertial_augmented,
    link_failure_sample,
    validate_stochastic,
)
from .connectivity import (
    ApsSequence,
    EpochCertificate,
    UscVerdict,
    check_usc,
    comparison_function,
    detect_gamma_epoch,
    diff_span,
    max_balance_alpha,
    solve_aps_periodic,
    strong_feedback_floor,
    verify_aps,
)
from .dynamics import (
    BeliefState,
    ForecastQuery,
    bayesian_update_row,
    forecast,
    influence_lower_bound,
    likelihood_ratio_expectation,
    residual_u,
    step_diffusion,
    step_inertial,
    step_standard,
)
from .fixtures import fixture_names, load_fixture
from .harness import (
    RecordOptions,
    Scenario,
    TrialTrace,
    disagreement_series,
    initial_connectivity_time,
    learning_time,
    run_monte_carlo,
    run_trial,
)
from .results import ResultBundle, read_results, write_results
from .scenario import parse_scenario
from .world import (
    WorldModel,
    is_identifiable,
    is_self_sufficient,
    make_world,
    min_likelihood,
    sample_signal,
    theta_star_set,
)

__all__ = [
    "ResultBundle",
    "read_results",
    "write_results",
    "ApsSequence",
    "backward_product",
    "bayesian_update_row",
    "BeliefState",
    "chain_from_dict",
    "chain_matrix_at",
    "ChainSpec",
    "check_usc",
    "comparison_function",
    "detect_gamma_epoch",
    "diff_span",
    "diffusion_augmented_pair",
    "disagreement_series",
    "EpochCertificate",
    "erdos_renyi_sample",
    "fixture_names",
    "forecast",
    "ForecastQuery",
    "inertial_augmented",
    "influence_lower_bound",
    "initial_connectivity_time",
    "is_identifiable",
    "is_self_sufficient",
    "learning_time",
    "likelihood_ratio_expectation",
    "link_failure_sample",
    "load_fixture",
    "make_world",
    "max_balance_alpha",
    "min_likelihood",
    "parse_scenario",
    "RecordOptions",
    "residual_u",
    "run_monte_carlo",
    "run_trial",
    "sample_signal",
    "Scenario",
    "solve_aps_periodic",
    "step_diffusion",
    "step_inertial",
    "step_standard",
    "strong_feedback_floor",
    "theta_star_set",
    "TrialTrace",
    "UscVerdict",
    "validate_stochastic",
    "verify_aps",
    "WorldModel",
]
