"""
Learning from demonstrations.

The store tracks A*, the best recommended action over the trailing window
of rounds. When a sampler stops improving, a few descent steps on a
cross-entropy loss pull its real-valued output toward A*.
"""

from __future__ import annotations

import logging
from collections import deque
from typing import TYPE_CHECKING, Sequence

import numpy as np
import torch

from core.types import ActionVector

if TYPE_CHECKING:
    from samplers.base import Sampler
    from samplers.context import RoundContext

logger = logging.getLogger(__name__)

DEMO_CLIP = 1e-6


def demonstration_loss(rv, a_star: ActionVector):
    """Mean binary cross-entropy of ``rv`` against A*; tensors keep their graph."""
    if isinstance(rv, torch.Tensor):
        target = torch.from_numpy(a_star.bits.astype(np.float64)).to(rv.dtype)
        p = rv.clamp(DEMO_CLIP, 1 - DEMO_CLIP)
        return -(target * torch.log(p) + (1 - target) * torch.log(1 - p)).mean()
    target = a_star.bits.astype(np.float64)
    p = np.clip(np.asarray(rv, dtype=np.float64), DEMO_CLIP, 1 - DEMO_CLIP)
    return float(-np.mean(target * np.log(p) + (1 - target) * np.log(1 - p)))


class DemonstrationStore:
    """Trailing-window maximum of composite scores (monotone deque)."""

    def __init__(self, window: int):
        if window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        self.window = window
        self._queue: deque[tuple[int, float, ActionVector]] = deque()
        self.staleness = 0

    def push(self, t: int, action: ActionVector, score: float) -> None:
        previous = self.a_star
        while self._queue and self._queue[-1][1] <= score:
            self._queue.pop()
        self._queue.append((t, score, action))
        while self._queue[0][0] <= t - self.window:
            self._queue.popleft()
        self.staleness = 0 if self.a_star != previous else self.staleness + 1

    @property
    def a_star(self) -> ActionVector | None:
        return self._queue[0][2] if self._queue else None

    @property
    def best_score(self) -> float | None:
        return self._queue[0][1] if self._queue else None


def trigger_and_apply(
    sampler: "Sampler",
    store: DemonstrationStore,
    n_D: int,
    ctx: "RoundContext",
    lr: float = 1e-2,
) -> bool:
    """Run ``n_D`` demonstration steps on the sampler's output head; False when nothing applies."""
    a_star = store.a_star
    if a_star is None or not sampler.supports_demonstration:
        return False
    params = sampler.demonstration_parameters()
    if not params:
        return False
    optimizer = torch.optim.Adam(params, lr=lr)
    first = last = None
    for _ in range(n_D):
        loss = demonstration_loss(sampler.real_output(ctx), a_star)
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        first = float(loss.detach()) if first is None else first
        last = float(loss.detach())
    sampler.after_demonstration()
    logger.info(f"🔄 Demonstration for {sampler.name} at t={ctx.t}: loss {first:.4f} -> {last:.4f}")
    return True


class CoTrainer:
    """Stuck detection per sampler plus the demonstration trigger."""

    def __init__(self, stuck_rounds: int, n_D: int, lr: float = 1e-2, enabled: bool = True):
        self.stuck_rounds = stuck_rounds
        self.n_D = n_D
        self.lr = lr
        self.enabled = enabled
        self.best: dict[str, float] = {}
        self.last_improved: dict[str, int] = {}
        self.applied: dict[str, int] = {}

    def note_submission(self, name: str, t: int, best_score: float) -> None:
        if name not in self.best or best_score > self.best[name]:
            self.best[name] = best_score
            self.last_improved[name] = t

    def is_stuck(self, name: str, t: int) -> bool:
        return name in self.last_improved and t - self.last_improved[name] >= self.stuck_rounds

    def step(self, ctx: "RoundContext", samplers: Sequence["Sampler"], store: DemonstrationStore) -> list[str]:
        """Apply demonstrations to every stuck sampler; returns their names."""
        if not self.enabled:
            return []
        done = []
        for sampler in samplers:
            if not sampler.supports_demonstration or not self.is_stuck(sampler.name, ctx.t):
                continue
            if trigger_and_apply(sampler, store, self.n_D, ctx, self.lr):
                done.append(sampler.name)
                self.applied[sampler.name] = self.applied.get(sampler.name, 0) + 1
                self.last_improved[sampler.name] = ctx.t
        return done
