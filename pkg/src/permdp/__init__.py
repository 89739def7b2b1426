"""Robust permissive controller synthesis for interval MDPs."""

from .model import (
    STAY,
    DeterministicStrategy,
    Diagnostic,
    ImdpModel,
    ModelError,
    MultiStrategy,
    Spec,
    SpecKind,
    TransitionRow,
    choice_state_permissiveness,
    compliant_strategies,
    full_strategy,
    make_model,
    normalize_targets,
    normalized_permissiveness,
    permissiveness,
    restrict_to_action,
    validate_model,
)
from .intervals import InfeasibleRow, enumerate_vertices, is_feasible, worst_case_expectation
from .robust import (
    RewardDivergence,
    SatisfactionResult,
    ValueVector,
    almost_sure_reach_set,
    brute_force_robust_value,
    check_robust_satisfaction,
    robust_value,
)
from .textio import parse_model, parse_spec, parse_strategy, write_model, write_strategy
from .synth import (
    SynthConfig,
    SynthesisReport,
    VerificationFailed,
    check_maximality,
    extract_strategy,
    sweep_epsilon,
    synthesize,
)

__version__ = "0.1.0"

__all__ = [
    "STAY",
    "DeterministicStrategy",
    "Diagnostic",
    "ImdpModel",
    "InfeasibleRow",
    "ModelError",
    "MultiStrategy",
    "RewardDivergence",
    "SatisfactionResult",
    "Spec",
    "SpecKind",
    "SynthConfig",
    "SynthesisReport",
    "TransitionRow",
    "ValueVector",
    "VerificationFailed",
    "almost_sure_reach_set",
    "brute_force_robust_value",
    "check_maximality",
    "check_robust_satisfaction",
    "choice_state_permissiveness",
    "compliant_strategies",
    "enumerate_vertices",
    "extract_strategy",
    "full_strategy",
    "is_feasible",
    "make_model",
    "normalize_targets",
    "normalized_permissiveness",
    "parse_model",
    "parse_spec",
    "parse_strategy",
    "permissiveness",
    "restrict_to_action",
    "robust_value",
    "sweep_epsilon",
    "synthesize",
    "validate_model",
    "worst_case_expectation",
    "write_model",
    "write_strategy",
]
