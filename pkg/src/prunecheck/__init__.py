"""Prune neural control policies and measure exactly how safety changes.

The toolchain: describe a factored MDP (builtin grid environments or an
explicit JSON table), close the loop with a feed-forward policy to get the
induced Markov chain, check PCTL safety properties on it exactly, then
prune the policy's weights and measure the same property again. The delta
between the two measurements is the safety relevance of what was pruned.
"""

from .checking import (
    CheckResult,
    bounded_until_probability,
    check,
    evaluate_states,
    next_probability,
    prob01,
    seq_probability,
    until_probability,
)
from .environments import (
    AvoidanceConfig,
    MiniTaxiConfig,
    avoidance,
    from_uri,
    is_builtin_uri,
    mini_taxi,
)
from .errors import (
    ConfigError,
    LimitExceededError,
    ModelSemanticError,
    ModelSyntaxError,
    PolicyFormatError,
    PropertySemanticError,
    PropertySyntaxError,
    PrunecheckError,
    PruneSpecError,
    SchemaMismatchError,
    SolverError,
    UnknownLabelWarning,
)
from .induced import (
    BuildLimits,
    BuildResult,
    BuildStats,
    build_induced_dtmc,
    induced_to_explicit,
)
from .model import (
    Distribution,
    Dtmc,
    EnvironmentModel,
    StateVector,
    ValidationReport,
    dump_explicit_model,
    load_explicit_model,
    validate_model,
)
from .policy import Layer, NeuralPolicy, dump_policy, load_policy, make_policy
from .properties import (
    And,
    Eventually,
    FalseFormula,
    Globally,
    Label,
    Next,
    Not,
    Or,
    Prob,
    Seq,
    TrueFormula,
    Until,
    format_formula,
    parse_property,
)
from .pruning import (
    PruneMask,
    PruneSpec,
    apply_mask,
    dump_mask,
    feature_prune,
    l1_prune,
    load_mask,
    prune,
    prune_count,
    random_prune,
)
from .workflow import (
    ChainStats,
    SafetyReport,
    feature_importance,
    measure,
    parse_fraction_grid,
    prune_and_measure,
    report_to_dict,
    sweep,
)

__version__ = "0.1.0"

__all__ = [
    "And",
    "AvoidanceConfig",
    "BuildLimits",
    "BuildResult",
    "BuildStats",
    "ChainStats",
    "CheckResult",
    "ConfigError",
    "Distribution",
    "Dtmc",
    "EnvironmentModel",
    "Eventually",
    "FalseFormula",
    "Globally",
    "Label",
    "Layer",
    "LimitExceededError",
    "MiniTaxiConfig",
    "ModelSemanticError",
    "ModelSyntaxError",
    "NeuralPolicy",
    "Next",
    "Not",
    "Or",
    "PolicyFormatError",
    "Prob",
    "PropertySemanticError",
    "PropertySyntaxError",
    "PruneMask",
    "PruneSpec",
    "PruneSpecError",
    "PrunecheckError",
    "SafetyReport",
    "SchemaMismatchError",
    "Seq",
    "SolverError",
    "StateVector",
    "TrueFormula",
    "UnknownLabelWarning",
    "Until",
    "ValidationReport",
    "apply_mask",
    "avoidance",
    "bounded_until_probability",
    "build_induced_dtmc",
    "check",
    "dump_explicit_model",
    "dump_mask",
    "dump_policy",
    "evaluate_states",
    "feature_importance",
    "feature_prune",
    "format_formula",
    "from_uri",
    "induced_to_explicit",
    "is_builtin_uri",
    "l1_prune",
    "load_explicit_model",
    "load_mask",
    "load_policy",
    "make_policy",
    "measure",
    "mini_taxi",
    "next_probability",
    "parse_fraction_grid",
    "parse_property",
    "prob01",
    "prune",
    "prune_and_measure",
    "prune_count",
    "random_prune",
    "report_to_dict",
    "seq_probability",
    "sweep",
    "until_probability",
    "validate_model",
]
