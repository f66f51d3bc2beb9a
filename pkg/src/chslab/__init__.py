"""Numerical laboratory for phase-keyed pseudorandom states built from one
shared Haar-random state, the matching impossibility attack, the SWAP-test
commitment scheme, and the pretty good measurement bound, all checked exactly
at desk scale."""

from .budgets import BudgetExceeded, Budgets, DEFAULT_BUDGETS
from .haar import HaarSampler, exact_moment, sample_haar, symmetric_projector
from .qla import (
    DensityOperator,
    PureState,
    fidelity,
    gram_trace_distance,
    inv_sqrt_on_support,
    partial_trace,
    tensor,
    trace_distance,
)
from .reporting import ExperimentReport
from .typestates import (
    OrderedTuple,
    TypeVector,
    apply_phase,
    is_l_fold_prefix_cf,
    key_average,
    sample_type,
    sample_type_conditioned,
    split_average,
    type_state,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded",
    "Budgets",
    "DEFAULT_BUDGETS",
    "DensityOperator",
    "ExperimentReport",
    "HaarSampler",
    "OrderedTuple",
    "PureState",
    "TypeVector",
    "apply_phase",
    "exact_moment",
    "fidelity",
    "gram_trace_distance",
    "inv_sqrt_on_support",
    "is_l_fold_prefix_cf",
    "key_average",
    "partial_trace",
    "sample_haar",
    "sample_type",
    "sample_type_conditioned",
    "split_average",
    "symmetric_projector",
    "tensor",
    "trace_distance",
    "type_state",
]
