"""
Random and teacher-student (TLBO) samplers.

The random sampler explores uniformly and resubmits the best sample it has
seen. TLBO works on the round's pool of elites from the other samplers:
teacher steps pull a student toward the best member, student steps move
one student relative to another.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from core.errors import ConfigurationError, InvalidInputError
from core.scoring import binarize_top_k
from core.types import ActionVector, EliteSample, Hyperparameters, SamplerId
from samplers.base import Sampler
from samplers.context import RoundContext


def random_sample(L: int, K: int, rng: np.random.Generator) -> ActionVector:
    """Uniform K-subset by partial Fisher-Yates."""
    if not 1 <= K <= L:
        raise InvalidInputError(f"K must be in [1, L={L}], got {K}")
    items = np.arange(L)
    for i in range(K):
        j = int(rng.integers(i, L))
        items[i], items[j] = items[j], items[i]
    return ActionVector.from_indices(L, items[:K])


def _rand(rng: np.random.Generator, rand: float | None) -> float:
    return float(rng.random()) if rand is None else rand


def tlbo_teacher_step(
    A: ActionVector, T: ActionVector, rng: np.random.Generator, rand: float | None = None
) -> ActionVector:
    """B = A + rand * (T - A), binarized."""
    a = A.bits.astype(np.float64)
    b = a + _rand(rng, rand) * (T.bits - a)
    return binarize_top_k(b, A.K)


def tlbo_student_step(
    A: ActionVector,
    B: ActionVector,
    score_a: float,
    score_b: float,
    rng: np.random.Generator,
    rand: float | None = None,
) -> ActionVector:
    """Move A toward B when B scores higher, away from it otherwise."""
    a = A.bits.astype(np.float64)
    b = B.bits.astype(np.float64)
    r = _rand(rng, rand)
    c = a + r * (b - a) if score_a < score_b else a + r * (a - b)
    return binarize_top_k(c, A.K)


class BestInHistory:
    """Best action seen so far; the action is kept, its score is refreshed as the surrogate drifts."""

    def __init__(self):
        self.best: ActionVector | None = None
        self.score = -math.inf

    def offer(self, action: ActionVector, score: float) -> bool:
        if score > self.score:
            self.best = action
            self.score = score
            return True
        return False

    def rescore(self, score: float) -> None:
        if self.best is not None:
            self.score = float(score)


class RandomSampler(Sampler):
    sampler_id = SamplerId.RANDOM

    def __init__(self, hparams: Hyperparameters, rng: np.random.Generator):
        super().__init__(hparams, rng)
        self.history = BestInHistory()

    def draw(self, count: int) -> list[ActionVector]:
        return [random_sample(self.hparams.L, self.hparams.K, self.rng) for _ in range(count)]

    def _composite(self, samples: Sequence[EliteSample]) -> np.ndarray:
        return np.array([s.surrogate_score - self.hparams.lam * s.violation_rate for s in samples])

    def propose(self, ctx: RoundContext, quota: int) -> list[EliteSample]:
        if quota <= 0:
            return []
        actions = [] if self.history.best is None else [self.history.best]
        actions += self.draw(quota - len(actions))
        elites = self.make_elites(ctx, actions)
        if self.history.best is not None and not ctx.standalone:
            self.history.rescore(self._composite(elites[:1])[0])
        return elites

    def observe_round(self, ctx: RoundContext, pool: Sequence[EliteSample]) -> None:
        if not pool:
            return
        if ctx.standalone:
            scores = self._composite(pool)
        else:
            # stored best and the pool are compared under the current surrogate
            actions = [s.action for s in pool]
            if self.history.best is not None:
                fresh = ctx.score([self.history.best, *actions])
                self.history.rescore(fresh[0])
                scores = fresh[1:]
            else:
                scores = ctx.score(actions)
        for s, score in zip(pool, scores):
            self.history.offer(s.action, float(score))


class TlboSampler(Sampler):
    sampler_id = SamplerId.TLBO

    def propose(self, ctx: RoundContext, quota: int) -> list[EliteSample]:
        if ctx.standalone:
            raise ConfigurationError("The teacher-student sampler cannot run on its own")
        pool = list(ctx.pool)
        if quota <= 0 or not pool:
            return []
        scores = np.array([s.surrogate_score - self.hparams.lam * s.violation_rate for s in pool])
        teacher = pool[int(np.argmax(scores))].action
        n_teacher = math.ceil(quota / 2)

        actions = []
        for _ in range(n_teacher):
            student = pool[int(self.rng.integers(len(pool)))].action
            actions.append(tlbo_teacher_step(student, teacher, self.rng))
        for _ in range(quota - n_teacher):
            i, j = self.rng.choice(len(pool), size=2, replace=len(pool) < 2)
            actions.append(tlbo_student_step(pool[i].action, pool[j].action, scores[i], scores[j], self.rng))
        return self.make_elites(ctx, actions)
