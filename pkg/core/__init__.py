"""
Core domain types, diversity constraints and scoring arithmetic.
"""

from .errors import (
    CmabError,
    InvalidInputError,
    DegenerateInputError,
    InfeasibleError,
    EndOfLogError,
    ConfigurationError,
    UndefinedWindowError,
    InternalError,
)
from .types import (
    SamplerId,
    ActionVector,
    as_real_vector,
    FeatureMatrix,
    ConstraintSet,
    EliteSample,
    Hyperparameters,
)
from .diversity import ned, pairwise_ned, build_constraints, tau_for_count, violation_rate
from .scoring import binarize_top_k, composite_score

__all__ = [
    "CmabError",
    "InvalidInputError",
    "DegenerateInputError",
    "InfeasibleError",
    "EndOfLogError",
    "ConfigurationError",
    "UndefinedWindowError",
    "InternalError",
    "SamplerId",
    "ActionVector",
    "as_real_vector",
    "FeatureMatrix",
    "ConstraintSet",
    "EliteSample",
    "Hyperparameters",
    "ned",
    "pairwise_ned",
    "build_constraints",
    "tau_for_count",
    "violation_rate",
    "binarize_top_k",
    "composite_score",
]
