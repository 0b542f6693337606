"""Worst-case instance construction and certification for regularized
composite convex optimization under black-box first-order oracles."""

from .adversary import (
    AdversaryConfig,
    AdversaryState,
    BoundReport,
    Instance,
    InstanceParams,
    derive_params,
    finalize,
    hstar,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    lower_bound,
    respond,
    save_instance,
    solution_size_bound,
    value_floor,
)
from .envelope import (
    AffinePiece,
    ChainFunction,
    EnvelopeResult,
    envelope,
    eval_max,
    holder_constant,
    simplex_project,
)
from .regularizer import PowerNorm, euclidean_power_prox, reg_subgrad, reg_value
from .solvers import (
    METHODS,
    CompositeProblem,
    RunRecord,
    fgm_composite,
    fgm_restart,
    prox_gradient,
    reference_solve,
    run_method,
    subgradient_method,
)
from .verify import (
    CheckReport,
    check_lower_bound,
    check_parameter_identities,
    check_smoothing_lemmas,
    check_solution_bound,
    estimate_rate,
    run_against_adversary,
)

__version__ = "0.1.0"

__all__ = [
    "AdversaryConfig",
    "AdversaryState",
    "AffinePiece",
    "BoundReport",
    "ChainFunction",
    "CheckReport",
    "CompositeProblem",
    "EnvelopeResult",
    "Instance",
    "InstanceParams",
    "METHODS",
    "PowerNorm",
    "RunRecord",
    "check_lower_bound",
    "check_parameter_identities",
    "check_smoothing_lemmas",
    "check_solution_bound",
    "derive_params",
    "envelope",
    "estimate_rate",
    "euclidean_power_prox",
    "eval_max",
    "fgm_composite",
    "fgm_restart",
    "finalize",
    "holder_constant",
    "hstar",
    "instance_from_dict",
    "instance_to_dict",
    "load_instance",
    "lower_bound",
    "prox_gradient",
    "reference_solve",
    "reg_subgrad",
    "reg_value",
    "respond",
    "run_against_adversary",
    "run_method",
    "save_instance",
    "simplex_project",
    "solution_size_bound",
    "subgradient_method",
    "value_floor",
]
