"""
Shared sample buffers between the master and the samplers.

- elite buffer: the best historical elite samples by surrogate score
- recommended buffer: the latest actions the master actually played

Samplers only ever see a frozen snapshot taken at the start of a round.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from core.types import ActionVector, EliteSample


@dataclass(frozen=True)
class RecommendedEntry:
    t: int
    action: ActionVector
    reward: float
    violation: float


@dataclass(frozen=True)
class BuffersSnapshot:
    elites: tuple[EliteSample, ...] = ()
    recommended: tuple[RecommendedEntry, ...] = ()


class SharedBuffers:
    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._elites: list[EliteSample] = []
        self._recommended: deque[RecommendedEntry] = deque(maxlen=capacity)

    def push_elite(self, sample: EliteSample) -> None:
        """Keep the top ``capacity`` distinct actions, sorted descending by surrogate score."""
        for i, kept in enumerate(self._elites):
            if kept.action == sample.action:
                if kept.surrogate_score >= sample.surrogate_score:
                    return
                del self._elites[i]
                break
        self._elites.append(sample)
        self._elites.sort(key=lambda s: -s.surrogate_score)
        del self._elites[self.capacity :]

    def push_recommended(self, entry: RecommendedEntry) -> None:
        self._recommended.append(entry)

    def snapshot(self) -> BuffersSnapshot:
        return BuffersSnapshot(elites=tuple(self._elites), recommended=tuple(self._recommended))

    def __repr__(self) -> str:
        return f"SharedBuffers(elites={len(self._elites)}, recommended={len(self._recommended)}/{self.capacity})"
