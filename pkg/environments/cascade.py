"""
Cascading-bandit click model.

The user examines the list from the top. Each examined item attracts with
probability rho' and, once attracted, satisfies with probability v'
(reward 1, stop). Otherwise the user moves on with probability gamma_c.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from core.errors import InvalidInputError
from core.types import ActionVector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CascadeSpec:
    attract: np.ndarray
    satisfy: np.ndarray
    gamma_c: float = 0.9

    def __post_init__(self):
        attract = np.asarray(self.attract, dtype=np.float64)
        satisfy = np.asarray(self.satisfy, dtype=np.float64)
        if attract.shape != satisfy.shape or attract.ndim != 1:
            raise InvalidInputError("attract and satisfy must be vectors of equal length")
        for name, p in (("attract", attract), ("satisfy", satisfy)):
            if np.any((p < 0) | (p > 1)):
                raise InvalidInputError(f"{name} probabilities must lie in [0, 1]")
        if not 0.0 <= self.gamma_c <= 1.0:
            raise InvalidInputError(f"gamma_c must be in [0, 1], got {self.gamma_c}")
        object.__setattr__(self, "attract", attract)
        object.__setattr__(self, "satisfy", satisfy)

    @property
    def L(self) -> int:
        return int(self.attract.size)


def generate_cascade_spec(L: int, rng: np.random.Generator, gamma_c: float = 0.9) -> CascadeSpec:
    return CascadeSpec(attract=rng.uniform(size=L), satisfy=rng.uniform(size=L), gamma_c=gamma_c)


def _check_items(spec: CascadeSpec, ordered_items: Sequence[int]) -> np.ndarray:
    items = np.asarray(ordered_items, dtype=np.int64)
    if items.ndim != 1 or items.size == 0:
        raise InvalidInputError("ordered_items must be a non-empty list")
    if np.unique(items).size != items.size or items.min() < 0 or items.max() >= spec.L:
        raise InvalidInputError(f"ordered_items must be distinct indices below L={spec.L}")
    return items


def cascade_step(spec: CascadeSpec, ordered_items: Sequence[int], rng: np.random.Generator) -> tuple[int, int]:
    """Simulate one user; returns (reward, number of examined positions)."""
    items = _check_items(spec, ordered_items)
    examined = 0
    for pos, item in enumerate(items):
        examined += 1
        if rng.random() < spec.attract[item] and rng.random() < spec.satisfy[item]:
            return 1, examined
        if pos == items.size - 1 or rng.random() >= spec.gamma_c:
            break
    return 0, examined


def cascade_expected_reward(spec: CascadeSpec, ordered_items: Sequence[int]) -> float:
    items = _check_items(spec, ordered_items)
    success = spec.attract[items] * spec.satisfy[items]
    reach = 1.0
    total = 0.0
    for p in success:
        total += reach * p
        reach *= (1.0 - p) * spec.gamma_c
    return float(total)


class CascadeEnvironment:
    """Plays an action as a list ordered by descending item score (ties to the lower index)."""

    def __init__(self, spec: CascadeSpec):
        self.spec = spec
        self.L = spec.L
        self.item_scores: np.ndarray | None = None
        self.examined: list[int] = []

    @property
    def horizon(self) -> int | None:
        return None

    def set_item_scores(self, scores: np.ndarray) -> None:
        scores = np.asarray(scores, dtype=np.float64)
        if scores.shape != (self.L,):
            raise InvalidInputError(f"Item scores must have length {self.L}")
        self.item_scores = scores.copy()

    def order(self, action: ActionVector) -> np.ndarray:
        idx = action.indices
        if self.item_scores is None:
            return idx
        return idx[np.argsort(-self.item_scores[idx], kind="stable")]

    def feedback(self, t: int, action: ActionVector, rng: np.random.Generator) -> float:
        reward, examined = cascade_step(self.spec, self.order(action), rng)
        self.examined.append(examined)
        return float(reward)

    def expected(self, action: ActionVector) -> float | None:
        return cascade_expected_reward(self.spec, self.order(action))
