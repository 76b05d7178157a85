"""
Replay feedback from a single user's click log.

Round t is mapped to the t-th event (1-based). The reward is the overlap
between the selected items and the items clicked in the 2K events around
that event, divided by 2K.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from core.errors import EndOfLogError, InvalidInputError
from core.types import ActionVector


@dataclass(frozen=True)
class ReplayLog:
    timestamps: np.ndarray
    items: np.ndarray
    L: int
    K: int
    resorted: bool = False

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        items = np.asarray(self.items, dtype=np.int64)
        if ts.shape != items.shape or ts.ndim != 1:
            raise InvalidInputError("timestamps and items must be 1-D arrays of equal length")
        if items.size == 0:
            raise InvalidInputError("Replay log is empty")
        if items.min() < 0 or items.max() >= self.L:
            raise InvalidInputError(f"Item index out of range for L={self.L}")
        if not 1 <= self.K <= self.L:
            raise InvalidInputError(f"K must be in [1, L], got {self.K}")
        if np.any(np.diff(ts) < 0):
            raise InvalidInputError("Replay log events must be sorted by timestamp")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "items", items)

    @property
    def n_events(self) -> int:
        return int(self.items.size)


def click_window(log: ReplayLog, t: int) -> np.ndarray:
    """Distinct items in the 2K events nearest to the event of round t (clamped at both ends)."""
    if t < 1:
        raise InvalidInputError(f"Rounds are 1-based, got t={t}")
    if t > log.n_events:
        raise EndOfLogError(f"Round {t} is beyond the log horizon of {log.n_events} events")
    width = 2 * log.K
    center = t - 1
    start = max(0, min(center - log.K, log.n_events - width))
    stop = min(log.n_events, start + width)
    return np.unique(log.items[start:stop])


def replay_feedback(log: ReplayLog, t: int, A: ActionVector) -> float:
    if A.L != log.L:
        raise InvalidInputError(f"Action length {A.L} does not match log L={log.L}")
    clicked = click_window(log, t)
    overlap = np.count_nonzero(A.bits[clicked])
    return overlap / (2 * log.K)


class ReplayEnvironment:
    def __init__(self, log: ReplayLog):
        self.log = log
        self.L = log.L

    @property
    def horizon(self) -> int | None:
        return self.log.n_events

    def feedback(self, t: int, action: ActionVector, rng: np.random.Generator) -> float:
        return replay_feedback(self.log, t, action)

    def expected(self, action: ActionVector) -> float | None:
        return None
