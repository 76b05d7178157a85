"""
Per-round metrics of one experiment replicate: reward r_t, violation rate
c_t, the chosen sampler, and the adoption rate arr_t of each sampler.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from core.errors import UndefinedWindowError
from core.types import SamplerId
from master.state import RoundRecord


@dataclass
class MetricsSeries:
    exploration_horizon: int = 0
    rewards: list[float] = field(default_factory=list)
    violations: list[float] = field(default_factory=list)
    chosen: list[SamplerId] = field(default_factory=list)
    scores: list[float] = field(default_factory=list)
    timings: list[dict[SamplerId, float]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rewards)

    def append(self, record: RoundRecord) -> None:
        self.rewards.append(record.reward)
        self.violations.append(record.violation)
        self.chosen.append(record.sampler_id)
        self.scores.append(record.score)
        self.timings.append(dict(record.timings))

    def cumulative_mean(self, name: str = "rewards") -> np.ndarray:
        values = np.asarray(getattr(self, name), dtype=np.float64)
        return np.cumsum(values) / np.arange(1, values.size + 1) if values.size else values

    def samplers_seen(self) -> list[SamplerId]:
        seen = set(self.chosen)
        return [s for s in SamplerId if s in seen]

    def arr_trajectory(self, sampler_id: SamplerId) -> np.ndarray:
        """arr_t for t = horizon+1 .. T."""
        start = self.exploration_horizon
        hits = np.array([c is sampler_id for c in self.chosen[start:]], dtype=np.float64)
        return np.cumsum(hits) / np.arange(1, hits.size + 1) if hits.size else hits

    def timing_totals(self) -> dict[SamplerId, float]:
        totals: dict[SamplerId, float] = {}
        for row in self.timings:
            for sid, seconds in row.items():
                totals[sid] = totals.get(sid, 0.0) + seconds
        return totals


def compute_arr(chosen: Sequence[SamplerId], sampler_id: SamplerId, t: int, exploration_horizon: int) -> float:
    """Fraction of rounds in (horizon, t] whose chosen sample came from ``sampler_id``."""
    if t <= exploration_horizon:
        raise UndefinedWindowError(f"arr is undefined for t={t} <= exploration horizon {exploration_horizon}")
    if t > len(chosen):
        raise UndefinedWindowError(f"t={t} is beyond the {len(chosen)} recorded rounds")
    window = chosen[exploration_horizon:t]
    return sum(1 for c in window if c is sampler_id) / len(window)
