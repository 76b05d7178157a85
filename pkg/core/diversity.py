"""
Normalized edit distance (NED) over numeric features and the diversity constraints built from it.

NED(u, v) = sum|u - v| / (sum u + sum v). Pairs of items whose features are
closer than the threshold tau may not be recommended together.
"""

import logging

import numpy as np
from scipy.spatial.distance import pdist

from core.errors import DegenerateInputError, InvalidInputError
from core.types import ActionVector, ConstraintSet, FeatureMatrix

logger = logging.getLogger(__name__)


def ned(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise InvalidInputError(f"NED needs two vectors of equal length, got {u.shape} and {v.shape}")
    denom = u.sum() + v.sum()
    if denom <= 0.0:
        raise DegenerateInputError("NED undefined: feature sums are zero")
    return float(np.abs(u - v).sum() / denom)


def pairwise_ned(F: FeatureMatrix) -> np.ndarray:
    """Condensed vector of NED over all pairs i < j (scipy ``pdist`` ordering).

    Pairs with a non-positive denominator get NaN.
    """
    rows = F.rows
    l1 = pdist(rows, metric="cityblock")
    sums = rows.sum(axis=1)
    i, j = np.triu_indices(F.L, k=1)
    denom = sums[i] + sums[j]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(denom > 0.0, l1 / np.where(denom > 0.0, denom, 1.0), np.nan)
    return out


def build_constraints(F: FeatureMatrix, tau: float) -> ConstraintSet:
    if not 0.0 <= tau <= 1.0:
        raise InvalidInputError(f"tau must be in [0, 1], got {tau}")
    L = F.L
    if L < 2:
        return ConstraintSet(L=L)
    dist = pairwise_ned(F)
    undefined = int(np.isnan(dist).sum())
    if undefined:
        logger.warning(f"⚠️ {undefined} item pairs have all-zero features; NED undefined, no constraint added")
    i, j = np.triu_indices(L, k=1)
    mask = np.nan_to_num(dist, nan=np.inf) < tau
    constraints = ConstraintSet(L=L, pairs=np.stack([i[mask], j[mask]], axis=1))
    logger.info(f"Built {constraints.M} diversity constraints (L={L}, tau={tau})")
    return constraints


def tau_for_count(F: FeatureMatrix, target_M: int) -> float:
    """Smallest threshold whose constraint set holds at least ``target_M`` pairs."""
    if target_M < 0:
        raise InvalidInputError(f"target_M must be >= 0, got {target_M}")
    if target_M == 0:
        return 0.0
    dist = np.sort(_finite(pairwise_ned(F)))
    if target_M > dist.size:
        raise InvalidInputError(f"Only {dist.size} item pairs available, cannot reach {target_M}")
    return float(min(1.0, np.nextafter(dist[target_M - 1], np.inf)))


def _finite(values: np.ndarray) -> np.ndarray:
    return values[np.isfinite(values)]


def violation_rate(A: ActionVector, C: ConstraintSet) -> float:
    """Fraction of constraint pairs with both items selected; 0 when there are none."""
    if C.M == 0:
        return 0.0
    if A.L != C.L:
        raise InvalidInputError(f"Action length {A.L} does not match constraint set L={C.L}")
    bits = A.bits.astype(bool)
    violated = np.count_nonzero(bits[C.pairs[:, 0]] & bits[C.pairs[:, 1]])
    return violated / C.M
