"""
Base class for slave samplers.

Lifecycle per round:
- ``propose(ctx, quota)``: submit up to ``quota`` elite samples
- ``record(ctx, samples)``: receive the master's evaluation of this sampler's
  own samples (``surrogate_score`` holds the surrogate, or the real reward in
  standalone runs; ``violation_rate`` the constraint rate)
- ``observe_round(ctx, pool)``: see the whole scored pool of the round
- ``train(ctx)``: parameter update, every f_in rounds

Samplers with a real-valued output head also support co-training through
``real_output`` / ``demonstration_parameters``.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import ClassVar, Sequence

import numpy as np
import torch

from core.types import ActionVector, EliteSample, Hyperparameters, SamplerId
from samplers.context import RoundContext


class Sampler(ABC):
    sampler_id: ClassVar[SamplerId]
    supports_demonstration: ClassVar[bool] = False

    def __init__(self, hparams: Hyperparameters, rng: np.random.Generator):
        self.hparams = hparams
        self.rng = rng
        self.logger = logging.getLogger(f"{__name__}.{self.__class__.__name__}")

    @property
    def name(self) -> str:
        return self.sampler_id.value

    @abstractmethod
    def propose(self, ctx: RoundContext, quota: int) -> list[EliteSample]:
        ...

    def record(self, ctx: RoundContext, samples: Sequence[EliteSample]) -> None:
        pass

    def observe_round(self, ctx: RoundContext, pool: Sequence[EliteSample]) -> None:
        pass

    def train(self, ctx: RoundContext) -> None:
        pass

    # ------------------------------------------------------------------
    # Co-training hooks
    # ------------------------------------------------------------------

    def real_output(self, ctx: RoundContext) -> torch.Tensor:
        raise NotImplementedError(f"{self.name} has no real-valued output head")

    def demonstration_parameters(self) -> list[torch.Tensor]:
        return []

    def after_demonstration(self) -> None:
        pass

    # ------------------------------------------------------------------
    # Helpers
    # ------------------------------------------------------------------

    def make_elites(self, ctx: RoundContext, actions: Sequence[ActionVector]) -> list[EliteSample]:
        """Wrap actions with provenance, surrogate (when available) and violation rate."""
        if not actions:
            return []
        surrogate = ctx.surrogate(actions) if not ctx.standalone else np.zeros(len(actions))
        return [
            EliteSample(
                action=a,
                sampler_id=self.sampler_id,
                surrogate_score=float(u),
                violation_rate=ctx.violation(a),
            )
            for a, u in zip(actions, surrogate)
        ]


def reset_parameters(module: torch.nn.Module, rng: np.random.Generator) -> None:
    """Re-draw every parameter from a numpy stream, uniform in +-1/sqrt(fan_in)."""
    with torch.no_grad():
        for param in module.parameters():
            fan_in = param.shape[1] if param.dim() > 1 else param.shape[0]
            bound = 1.0 / np.sqrt(max(fan_in, 1))
            values = rng.uniform(-bound, bound, size=tuple(param.shape))
            param.copy_(torch.from_numpy(values).to(param.dtype))
