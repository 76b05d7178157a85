"""Protocol shared by all bandit environments."""

from typing import Protocol, runtime_checkable

import numpy as np

from core.types import ActionVector


@runtime_checkable
class BanditEnvironment(Protocol):
    """An environment answers one action per round with a scalar reward."""

    L: int

    @property
    def horizon(self) -> int | None:
        """Last playable round, or None when unbounded."""
        ...

    def feedback(self, t: int, action: ActionVector, rng: np.random.Generator) -> float:
        ...

    def expected(self, action: ActionVector) -> float | None:
        """Noiseless expected reward when known."""
        ...
