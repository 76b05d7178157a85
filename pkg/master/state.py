"""
Mutable master state carried across rounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from core.types import ActionVector, SamplerId


@dataclass
class RoundRecord:
    t: int
    action: ActionVector
    reward: float
    violation: float
    sampler_id: SamplerId
    score: float
    quotas: dict[SamplerId, int] = field(default_factory=dict)
    timings: dict[SamplerId, float] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.violation <= 1.0:
            raise ValueError(f"violation rate must be in [0, 1], got {self.violation}")


@dataclass
class MasterState:
    L: int
    exploration_horizon: int
    t: int = 0
    quotas: dict[SamplerId, int] = field(default_factory=dict)
    score_history: dict[SamplerId, float] = field(default_factory=dict)
    recommend_counts: np.ndarray | None = None
    chosen_counts: dict[SamplerId, int] = field(default_factory=dict)
    demonstrations: int = 0

    def __post_init__(self):
        if self.recommend_counts is None:
            self.recommend_counts = np.zeros(self.L)

    @property
    def exploring(self) -> bool:
        return self.t <= self.exploration_horizon


def get_state_summary(state: MasterState) -> dict:
    return {
        "round": state.t,
        "phase": "exploration" if state.exploring else "master-slave",
        "quotas": {s.value: q for s, q in state.quotas.items()},
        "score_history": {s.value: round(v, 4) for s, v in state.score_history.items()},
        "chosen": {s.value: n for s, n in state.chosen_counts.items()},
        "demonstrations": state.demonstrations,
    }
