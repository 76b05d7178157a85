"""
Constrained optimum of the noiseless synthetic reward, used as the
reference line for experiment curves.
"""

from __future__ import annotations

import logging

import numpy as np

from core.types import ActionVector, ConstraintSet
from environments.synthetic import FeedbackForm, SyntheticFeedbackSpec, expected_reward
from samplers.ip_solver import LinearSurrogate, QuadraticSurrogate, solve_ip

logger = logging.getLogger(__name__)


def ground_truth(
    spec: SyntheticFeedbackSpec,
    C: ConstraintSet,
    K: int,
    exact_limit: int = 40,
    rng: np.random.Generator | None = None,
    restarts: int = 8,
) -> tuple[ActionVector, float, bool]:
    """(action, value, exact) for the best feasible K-subset of the noiseless reward."""
    if spec.form in (FeedbackForm.LINEAR, FeedbackForm.CUBIC):
        # x^3 is monotone on the nonnegative reals, so the cubic optimum is the linear one
        objective = LinearSurrogate(spec.theta)
    elif spec.form is FeedbackForm.QUADRATIC:
        objective = QuadraticSurrogate(spec.Q)
    else:
        objective = QuadraticSurrogate(np.outer(spec.theta, spec.theta) + spec.Q)
    result = solve_ip(objective, C, K, exact_limit=exact_limit, rng=rng, restarts=restarts)
    value = expected_reward(spec, result.action)
    if not result.exact:
        logger.warning(f"⚠️ Ground truth for L={spec.L} is heuristic (above the exact limit {exact_limit})")
    return result.action, value, result.exact
