"""Binarization of relaxed outputs and the reward/constraint composite score."""

import numpy as np

from core.errors import InvalidInputError
from core.types import ActionVector


def binarize_top_k(v, K: int) -> ActionVector:
    """Select the K largest components; ties go to the lowest index."""
    values = np.asarray(v, dtype=np.float64)
    if values.ndim != 1:
        raise InvalidInputError(f"binarize_top_k needs a 1-D vector, got shape {values.shape}")
    L = values.size
    if not 1 <= K <= L:
        raise InvalidInputError(f"K must be in [1, L={L}], got {K}")
    order = np.argsort(-values, kind="stable")
    bits = np.zeros(L, dtype=np.int8)
    bits[order[:K]] = 1
    return ActionVector(bits)


def composite_score(U, c, lam: float):
    """U - lambda * c. Works elementwise on arrays."""
    return U - lam * c
