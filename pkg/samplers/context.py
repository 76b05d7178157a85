"""
Per-round context handed to every sampler.

The master builds one RoundContext per round. It carries a frozen view of
the surrogate, the constraints and the shared buffers; samplers never see
mid-round updates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Protocol, Sequence

import numpy as np

from core.diversity import violation_rate
from core.errors import InternalError
from core.scoring import composite_score
from core.types import ActionVector, ConstraintSet, EliteSample, FeatureMatrix, Hyperparameters

if TYPE_CHECKING:
    from cotraining.buffers import BuffersSnapshot

logger = logging.getLogger(__name__)


class SurrogateOracle(Protocol):
    """Optimistic reward estimate U exposed by the master."""

    def __call__(self, actions: Sequence[ActionVector]) -> np.ndarray:
        ...

    def raw(self, X: np.ndarray) -> np.ndarray:
        """U at arbitrary (not necessarily normalized) rows of length L."""
        ...


@dataclass(frozen=True)
class RoundContext:
    t: int
    hparams: Hyperparameters
    constraints: ConstraintSet
    oracle: SurrogateOracle | None = None
    buffers: "BuffersSnapshot | None" = None
    pool: tuple[EliteSample, ...] = ()
    features: FeatureMatrix | None = None
    recommend_counts: np.ndarray | None = None
    extras: dict = field(default_factory=dict)

    @property
    def standalone(self) -> bool:
        """True when no surrogate is available (baseline runs on real feedback)."""
        return self.oracle is None

    def violation(self, action: ActionVector) -> float:
        return violation_rate(action, self.constraints)

    def surrogate(self, actions: Sequence[ActionVector]) -> np.ndarray:
        if self.oracle is None:
            raise InternalError("Surrogate requested in standalone mode")
        if not actions:
            return np.zeros(0)
        return np.asarray(self.oracle(actions), dtype=np.float64)

    def score(self, actions: Sequence[ActionVector], lam: float | None = None) -> np.ndarray:
        """Composite U - lam * c (lam defaults to the master's lambda)."""
        lam = self.hparams.lam if lam is None else lam
        c = np.array([self.violation(a) for a in actions])
        return composite_score(self.surrogate(actions), c, lam)
