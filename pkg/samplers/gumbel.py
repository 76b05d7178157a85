"""
Gumbel top-K subset sampling with an unordered-probability estimate.

Perturbing log-weights with Gumbel noise and keeping the K largest draws a
subset in Plackett-Luce order. The probability of the unordered subset is
the sum of its K! ordered probabilities; it is estimated as K! times the
mean over a set of orderings (exact when all K! orderings are used).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import torch
from scipy.special import gammaln

from core.errors import InvalidInputError
from core.types import ActionVector

PROB_CLIP = 1e-4
MAX_ENUMERATED_K = 7


@dataclass(frozen=True)
class SubsetDraw:
    action: ActionVector
    logprob: float
    perturbed: np.ndarray
    perms: np.ndarray

    @property
    def order(self) -> np.ndarray:
        """Items in the order they were drawn."""
        return np.argsort(-self.perturbed, kind="stable")[: self.action.K]


def clip_probs(out) -> np.ndarray:
    return np.clip(np.asarray(out, dtype=np.float64), PROB_CLIP, 1.0 - PROB_CLIP)


def gumbel_top_k(log_weights: np.ndarray, K: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Return (drawn items in order, perturbed scores)."""
    L = log_weights.size
    if not 1 <= K <= L:
        raise InvalidInputError(f"K must be in [1, L={L}], got {K}")
    perturbed = log_weights + rng.gumbel(size=L)
    return np.argsort(-perturbed, kind="stable")[:K], perturbed


def orderings(items: np.ndarray, m_perms: int, rng: np.random.Generator) -> np.ndarray:
    """All K! orderings when m_perms covers them, otherwise m_perms random ones."""
    K = items.size
    if K <= MAX_ENUMERATED_K and m_perms >= math.factorial(K):
        return np.array(list(itertools.permutations(items.tolist())), dtype=np.int64)
    return np.stack([items[rng.permutation(K)] for _ in range(m_perms)]).astype(np.int64)


def ordered_log_probs(log_weights: torch.Tensor, perms: torch.Tensor) -> torch.Tensor:
    """Plackett-Luce log-probability of each ordering (rows of ``perms``)."""
    lw = log_weights - log_weights.max().detach()
    w = torch.exp(lw)
    total = w.sum()
    picked = w[perms]
    before = torch.cumsum(picked, dim=1) - picked
    return (lw[perms] - torch.log(total - before)).sum(dim=1)


def subset_log_prob(log_weights: torch.Tensor, perms: torch.Tensor) -> torch.Tensor:
    """log(K! * mean of ordered probabilities); differentiable in ``log_weights``."""
    M, K = perms.shape
    ordered = ordered_log_probs(log_weights, perms)
    return torch.logsumexp(ordered, dim=0) - math.log(M) + float(gammaln(K + 1))


def sample_from_log_weights(
    log_weights: np.ndarray, K: int, m_perms: int, rng: np.random.Generator
) -> SubsetDraw:
    if m_perms < 1:
        raise InvalidInputError(f"m_perms must be >= 1, got {m_perms}")
    log_weights = np.asarray(log_weights, dtype=np.float64)
    items, perturbed = gumbel_top_k(log_weights, K, rng)
    action = ActionVector.from_indices(log_weights.size, items)
    perms = orderings(np.sort(items), m_perms, rng)
    if K == log_weights.size:
        return SubsetDraw(action=action, logprob=0.0, perturbed=perturbed, perms=perms)
    with torch.no_grad():
        value = float(subset_log_prob(torch.from_numpy(log_weights), torch.from_numpy(perms)))
    return SubsetDraw(action=action, logprob=min(0.0, value), perturbed=perturbed, perms=perms)


def gumbel_topk_sample(out, K: int, m_perms: int, rng: np.random.Generator) -> SubsetDraw:
    """Draw a K-subset with item weights ``out`` (clipped into (0, 1))."""
    return sample_from_log_weights(np.log(clip_probs(out)), K, m_perms, rng)

