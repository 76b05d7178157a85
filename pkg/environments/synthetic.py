"""
Synthetic bandit feedback in four functional forms.

- linear:    theta^T A
- cubic:     (theta^T A)^3
- quadratic: A^T Q A
- mixed:     (theta^T A)^2 + A^T Q A

Rewards are h(A) plus Normal(0, noise_sigma^2) noise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from core.errors import InvalidInputError
from core.types import ActionVector

logger = logging.getLogger(__name__)


class FeedbackForm(str, Enum):
    LINEAR = "linear"
    CUBIC = "cubic"
    QUADRATIC = "quadratic"
    MIXED = "mixed"


@dataclass(frozen=True)
class SyntheticFeedbackSpec:
    form: FeedbackForm
    theta: np.ndarray
    Q: np.ndarray
    noise_sigma: float = 0.1

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64)
        Q = np.asarray(self.Q, dtype=np.float64)
        if theta.ndim != 1:
            raise InvalidInputError(f"theta must be a vector, got shape {theta.shape}")
        if Q.shape != (theta.size, theta.size):
            raise InvalidInputError(f"Q must be {theta.size}x{theta.size}, got {Q.shape}")
        if self.noise_sigma < 0:
            raise InvalidInputError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        object.__setattr__(self, "form", FeedbackForm(self.form))
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "Q", Q)

    @property
    def L(self) -> int:
        return int(self.theta.size)


def generate_synthetic_spec(
    L: int, form: FeedbackForm | str, rng: np.random.Generator, noise_sigma: float = 0.1
) -> SyntheticFeedbackSpec:
    """theta ~ U[0, 0.5]^L and Q ~ U[0, 0.5]^(L x L)."""
    theta = rng.uniform(0.0, 0.5, size=L)
    Q = rng.uniform(0.0, 0.5, size=(L, L))
    return SyntheticFeedbackSpec(form=FeedbackForm(form), theta=theta, Q=Q, noise_sigma=noise_sigma)


def spec_from_click_log(log, form: FeedbackForm | str, rng: np.random.Generator, noise_sigma: float = 0.1):
    """Build feedback over a real item set: theta is the user's normalized click counts."""
    counts = np.bincount(log.items, minlength=log.L).astype(np.float64)
    if counts.sum() == 0:
        raise InvalidInputError("Click log has no events")
    theta = counts / counts.sum()
    Q = rng.uniform(0.0, 0.5, size=(log.L, log.L))
    return SyntheticFeedbackSpec(form=FeedbackForm(form), theta=theta, Q=Q, noise_sigma=noise_sigma)


def expected_reward(spec: SyntheticFeedbackSpec, A: ActionVector) -> float:
    if A.L != spec.L:
        raise InvalidInputError(f"Action length {A.L} does not match spec L={spec.L}")
    x = A.bits.astype(np.float64)
    if spec.form is FeedbackForm.LINEAR:
        return float(spec.theta @ x)
    if spec.form is FeedbackForm.CUBIC:
        return float((spec.theta @ x) ** 3)
    quad = float(x @ spec.Q @ x)
    if spec.form is FeedbackForm.QUADRATIC:
        return quad
    return float((spec.theta @ x) ** 2) + quad


def synthetic_feedback(spec: SyntheticFeedbackSpec, A: ActionVector, rng: np.random.Generator) -> float:
    h = expected_reward(spec, A)
    if spec.noise_sigma == 0:
        return h
    return h + float(rng.normal(0.0, spec.noise_sigma))


class SyntheticEnvironment:
    """Stationary synthetic environment, optionally redrawn every ``change_every`` rounds."""

    def __init__(
        self,
        spec: SyntheticFeedbackSpec,
        change_every: int | None = None,
        rng: np.random.Generator | None = None,
    ):
        if change_every is not None and rng is None:
            raise InvalidInputError("A piecewise-stationary environment needs its own rng")
        self.spec = spec
        self.L = spec.L
        self.change_every = change_every
        self._rng = rng
        self._segment = 0

    @property
    def horizon(self) -> int | None:
        return None

    def _maybe_redraw(self, t: int) -> None:
        if self.change_every is None:
            return
        segment = (t - 1) // self.change_every
        while self._segment < segment:
            self.spec = generate_synthetic_spec(self.L, self.spec.form, self._rng, self.spec.noise_sigma)
            self._segment += 1
            logger.info(f"🔄 Synthetic environment redrawn at round {t} (segment {self._segment})")

    def feedback(self, t: int, action: ActionVector, rng: np.random.Generator) -> float:
        self._maybe_redraw(t)
        return synthetic_feedback(self.spec, action, rng)

    def expected(self, action: ActionVector) -> float | None:
        return expected_reward(self.spec, action)
