"""
Domain types for top-K combinatorial bandits.

Features:
- ActionVector: binary super-arm with exactly K selected items
- RealVector helpers for relaxed sampler outputs
- FeatureMatrix / ConstraintSet for the diversity constraints
- EliteSample with provenance for the master's candidate pool
- Hyperparameters (validated, frozen)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.errors import InvalidInputError


class SamplerId(str, Enum):
    """Slave samplers. Values are the names used in config files and CSV output."""

    SOLVER = "solver"
    WOLPERTINGER = "wolpertinger"
    G2ANET = "g2anet"
    CEM = "cem"
    RANDOM = "random"
    TLBO = "tlbo"
    # standalone baseline only: REINFORCE over free per-arm logits
    GTKR = "gtkr"

    @classmethod
    def parse(cls, name: str) -> "SamplerId":
        try:
            return cls(name.strip().lower())
        except ValueError as e:
            valid = ", ".join(s.value for s in cls)
            raise InvalidInputError(f"Unknown sampler '{name}'. Valid: {valid}") from e


# ============================================================================
# ACTIONS
# ============================================================================


@dataclass(frozen=True, eq=False)
class ActionVector:
    """Binary length-L vector; the selected items form the super-arm."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 1 or bits.size == 0:
            raise InvalidInputError(f"ActionVector must be a non-empty 1-D vector, got shape {bits.shape}")
        if not np.all((bits == 0) | (bits == 1)):
            raise InvalidInputError("ActionVector entries must be 0 or 1")
        bits = bits.astype(np.int8)
        if bits.sum() < 1:
            raise InvalidInputError("ActionVector must select at least one item")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_indices(cls, L: int, indices: Iterable[int]) -> "ActionVector":
        idx = np.fromiter(indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= L):
            raise InvalidInputError(f"Item index out of range for L={L}: {idx.tolist()}")
        if np.unique(idx).size != idx.size:
            raise InvalidInputError(f"Duplicate item indices: {idx.tolist()}")
        bits = np.zeros(L, dtype=np.int8)
        bits[idx] = 1
        return cls(bits)

    @property
    def L(self) -> int:
        return int(self.bits.size)

    @property
    def K(self) -> int:
        return int(self.bits.sum())

    @cached_property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    @cached_property
    def key(self) -> bytes:
        return self.bits.tobytes()

    def normalized(self, pad_to: int | None = None) -> np.ndarray:
        """Unit-norm float copy, optionally zero-padded to ``pad_to`` entries."""
        x = self.bits.astype(np.float64) / np.sqrt(self.K)
        if pad_to is not None and pad_to > x.size:
            x = np.concatenate([x, np.zeros(pad_to - x.size)])
        return x

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ActionVector):
            return NotImplemented
        return self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        return f"ActionVector(L={self.L}, items={self.indices.tolist()})"


def as_real_vector(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """Clip a relaxed sampler output into [0, 1]."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise InvalidInputError(f"RealVector must be 1-D, got shape {v.shape}")
    return np.clip(v, 0.0, 1.0)


# ============================================================================
# FEATURES AND CONSTRAINTS
# ============================================================================


@dataclass(frozen=True)
class FeatureMatrix:
    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] == 0 or rows.shape[1] == 0:
            raise InvalidInputError(f"FeatureMatrix needs shape (L, d) with L, d >= 1, got {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise InvalidInputError("FeatureMatrix contains non-finite values")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def L(self) -> int:
        return int(self.rows.shape[0])

    @property
    def d(self) -> int:
        return int(self.rows.shape[1])


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    """Forbidden unordered item pairs (i < j) over L items."""

    L: int
    pairs: np.ndarray = field(default_factory=lambda: np.empty((0, 2), dtype=np.int64))

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        if pairs.size:
            if np.any(pairs[:, 0] == pairs[:, 1]):
                raise InvalidInputError("Constraint pair with i == j")
            pairs = np.sort(pairs, axis=1)
            if pairs.min() < 0 or pairs.max() >= self.L:
                raise InvalidInputError(f"Constraint index out of range for L={self.L}")
            pairs = np.unique(pairs, axis=0)
        pairs.setflags(write=False)
        object.__setattr__(self, "pairs", pairs)

    @property
    def M(self) -> int:
        return int(self.pairs.shape[0])

    @cached_property
    def conflict_matrix(self) -> np.ndarray:
        """Symmetric boolean L x L adjacency of the conflict graph."""
        adj = np.zeros((self.L, self.L), dtype=bool)
        if self.M:
            adj[self.pairs[:, 0], self.pairs[:, 1]] = True
            adj[self.pairs[:, 1], self.pairs[:, 0]] = True
        adj.setflags(write=False)
        return adj

    def as_set(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in self.pairs}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConstraintSet):
            return NotImplemented
        return self.L == other.L and np.array_equal(self.pairs, other.pairs)

    def __hash__(self) -> int:
        return hash((self.L, self.pairs.tobytes()))


@dataclass(frozen=True)
class EliteSample:
    action: ActionVector
    sampler_id: SamplerId
    surrogate_score: float = 0.0
    violation_rate: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.violation_rate <= 1.0:
            raise InvalidInputError(f"violation_rate must be in [0, 1], got {self.violation_rate}")


# ============================================================================
# HYPERPARAMETERS
# ============================================================================


class Hyperparameters(BaseModel):
    """Problem-level hyperparameters shared by the master and every sampler."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    L: int = Field(300, ge=1, description="Number of arms")
    K: int = Field(20, ge=1, description="Items per super-arm")
    lam: float = Field(5.0, ge=0.0, alias="lambda", description="Reward/constraint trade-off")
    tau: float = Field(0.5, ge=0.0, le=1.0, description="NED threshold")
    eps0: float = Field(0.05, gt=0.0, lt=0.5, description="Beta perturber clip")
    rho: float = Field(0.1, gt=0.0, le=1.0, description="Elite fraction")
    f_in: int = Field(20, ge=1, description="Interaction frequency")
    length_epoch: int = Field(20, ge=1)
    L2: int = Field(100, ge=1, description="Demonstration window")
    n_es: int = Field(10, ge=1, description="Elite samples per round")
    cluster_count: int = Field(20, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _check_k_le_l(self) -> "Hyperparameters":
        if self.K > self.L:
            raise ValueError(f"K ({self.K}) must not exceed L ({self.L})")
        return self
