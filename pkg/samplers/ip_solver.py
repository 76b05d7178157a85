"""
Integer programs over K-subsets with pairwise conflicts.

    max  b^T x   or   x^T Q x
    s.t. sum(x) = K,  x_i + x_j <= 1 for every conflict pair,  x binary

Exact branch-and-bound up to ``exact_limit`` items, simulated annealing over
feasibility-preserving swaps above it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from core.errors import InfeasibleError, InvalidInputError
from core.types import ActionVector, ConstraintSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LinearSurrogate:
    b: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=np.float64)
        if b.ndim != 1 or not np.all(np.isfinite(b)):
            raise InvalidInputError("LinearSurrogate needs a finite vector")
        object.__setattr__(self, "b", b)

    def value(self, bits: np.ndarray) -> float:
        return float(self.b @ bits)

    def as_matrix(self) -> np.ndarray:
        return np.diag(self.b)


@dataclass(frozen=True)
class QuadraticSurrogate:
    Q: np.ndarray
    e0: float = 0.0

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=np.float64)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or not np.all(np.isfinite(Q)):
            raise InvalidInputError("QuadraticSurrogate needs a finite square matrix")
        object.__setattr__(self, "Q", 0.5 * (Q + Q.T))

    def value(self, bits: np.ndarray) -> float:
        x = np.asarray(bits, dtype=np.float64)
        return float(x @ self.Q @ x)

    def as_matrix(self) -> np.ndarray:
        return self.Q


Objective = LinearSurrogate | QuadraticSurrogate


@dataclass(frozen=True)
class IpResult:
    action: ActionVector
    value: float
    exact: bool


# ============================================================================
# FEASIBILITY
# ============================================================================


def greedy_independent_set(adj: np.ndarray) -> np.ndarray:
    """Minimum-degree greedy independent set of the conflict graph."""
    alive = np.ones(adj.shape[0], dtype=bool)
    chosen = []
    degree = adj.sum(axis=1).astype(np.int64)
    while alive.any():
        candidates = np.flatnonzero(alive)
        v = int(candidates[np.argmin(degree[candidates])])
        chosen.append(v)
        removed = alive & (adj[v] | (np.arange(alive.size) == v))
        alive &= ~removed
        degree -= adj[:, removed].sum(axis=1)
    return np.asarray(chosen, dtype=np.int64)


def check_feasible(adj: np.ndarray, K: int) -> np.ndarray:
    mis = greedy_independent_set(adj)
    if mis.size < K:
        raise InfeasibleError(f"Conflict graph admits only {mis.size} compatible items (greedy), need K={K}")
    return mis


# ============================================================================
# EXACT BRANCH-AND-BOUND
# ============================================================================


def _linear_branch_and_bound(b: np.ndarray, adj: np.ndarray, K: int) -> tuple[list[int] | None, float]:
    order = np.argsort(-b, kind="stable")
    b_sorted = b[order]
    n = b.size
    best: list[int] | None = None
    best_value = -math.inf

    def search(pos: int, chosen: list[int], value: float, blocked: np.ndarray) -> None:
        nonlocal best, best_value
        need = K - len(chosen)
        if need == 0:
            if value > best_value:
                best, best_value = list(chosen), value
            return
        allowed = np.flatnonzero(~blocked[order[pos:]]) + pos
        if allowed.size < need:
            return
        if value + b_sorted[allowed[:need]].sum() <= best_value:
            return
        p = int(allowed[0])
        item = int(order[p])
        chosen.append(item)
        search(p + 1, chosen, value + b_sorted[p], blocked | adj[item])
        chosen.pop()
        skip = blocked.copy()
        skip[item] = True
        search(p + 1, chosen, value, skip)

    search(0, [], 0.0, np.zeros(n, dtype=bool))
    return best, best_value


def _quadratic_branch_and_bound(Q: np.ndarray, adj: np.ndarray, K: int) -> tuple[list[int] | None, float]:
    n = Q.shape[0]
    Qp = np.clip(Q, 0.0, None)
    np.fill_diagonal(Qp, 0.0)
    order = np.argsort(-(np.diag(Q) + Qp.sum(axis=1)), kind="stable")
    best: list[int] | None = None
    best_value = -math.inf

    def bound(value: float, contrib: np.ndarray, remaining: np.ndarray, r: int) -> float:
        gains = contrib[remaining]
        if r > 1:
            sub = Qp[np.ix_(remaining, remaining)]
            gains = gains + -np.sort(-sub, axis=1)[:, : r - 1].sum(axis=1)
        return value + -np.sort(-gains)[:r].sum()

    def search(pos: int, chosen: list[int], value: float, contrib: np.ndarray, blocked: np.ndarray) -> None:
        nonlocal best, best_value
        r = K - len(chosen)
        if r == 0:
            if value > best_value:
                best, best_value = list(chosen), value
            return
        remaining = order[pos:][~blocked[order[pos:]]]
        if remaining.size < r:
            return
        if bound(value, contrib, remaining, r) <= best_value:
            return
        item = int(remaining[0])
        p = int(np.flatnonzero(order == item)[0])
        chosen.append(item)
        search(p + 1, chosen, value + contrib[item], contrib + 2.0 * Q[item], blocked | adj[item])
        chosen.pop()
        skip = blocked.copy()
        skip[item] = True
        search(p + 1, chosen, value, contrib, skip)

    # contrib_i = Q_ii + 2 * sum_{j in S} Q_ij
    search(0, [], 0.0, np.diag(Q).copy(), np.zeros(n, dtype=bool))
    return best, best_value


# ============================================================================
# HEURISTIC
# ============================================================================


def _greedy_fill(order: np.ndarray, adj: np.ndarray, K: int, fallback: np.ndarray) -> np.ndarray:
    chosen: list[int] = []
    blocked = np.zeros(adj.shape[0], dtype=bool)
    for item in order:
        if not blocked[item]:
            chosen.append(int(item))
            blocked |= adj[item]
            if len(chosen) == K:
                return np.asarray(chosen)
    return fallback[:K]


def _anneal(
    Q: np.ndarray, adj: np.ndarray, start: np.ndarray, rng: np.random.Generator, iterations: int
) -> tuple[np.ndarray, float]:
    n = Q.shape[0]
    selected = np.zeros(n, dtype=bool)
    selected[start] = True
    s = Q[:, selected].sum(axis=1)
    conflicts = adj[:, selected].sum(axis=1).astype(np.int64)
    value = float(s[selected].sum())
    best_sel, best_value = selected.copy(), value
    scale = float(np.abs(Q).max()) * max(1, start.size) or 1.0
    temperature = 0.1 * scale
    cooling = (1e-4) ** (1.0 / max(iterations, 1))
    for _ in range(iterations):
        inside = np.flatnonzero(selected)
        i = int(inside[rng.integers(inside.size)])
        free = np.flatnonzero(~selected & (conflicts - adj[:, i] == 0))
        if free.size == 0:
            temperature *= cooling
            continue
        j = int(free[rng.integers(free.size)])
        delta = -2.0 * s[i] + Q[i, i] + 2.0 * (s[j] - Q[j, i]) + Q[j, j]
        if delta >= 0 or rng.random() < math.exp(delta / max(temperature, 1e-12)):
            selected[i], selected[j] = False, True
            s += Q[:, j] - Q[:, i]
            conflicts += adj[:, j].astype(np.int64) - adj[:, i].astype(np.int64)
            value += delta
            if value > best_value:
                best_sel, best_value = selected.copy(), value
        temperature *= cooling
    return np.flatnonzero(best_sel), best_value


def _heuristic(Q: np.ndarray, adj: np.ndarray, K: int, rng: np.random.Generator, restarts: int) -> tuple[np.ndarray, float]:
    mis = check_feasible(adj, K)
    n = Q.shape[0]
    iterations = 200 * n
    best, best_value = None, -math.inf
    for restart in range(restarts):
        if restart == 0:
            order = np.argsort(-(np.diag(Q) + 2.0 * Q.sum(axis=1)), kind="stable")
        else:
            order = rng.permutation(n)
        start = _greedy_fill(order, adj, K, mis)
        sel, value = _anneal(Q, adj, start, rng, iterations)
        if value > best_value:
            best, best_value = sel, value
    return best, best_value


# ============================================================================
# ENTRY POINT
# ============================================================================


def solve_ip(
    objective: Objective,
    C: ConstraintSet,
    K: int,
    exact_limit: int = 40,
    rng: np.random.Generator | None = None,
    restarts: int = 8,
) -> IpResult:
    """Best feasible K-subset for ``objective``; exact below ``exact_limit`` items."""
    L = C.L
    if not 1 <= K <= L:
        raise InvalidInputError(f"K must be in [1, L={L}], got {K}")
    size = objective.b.size if isinstance(objective, LinearSurrogate) else objective.Q.shape[0]
    if size != L:
        raise InvalidInputError(f"Objective has {size} items but constraints cover L={L}")
    adj = C.conflict_matrix
    if L <= exact_limit:
        if isinstance(objective, LinearSurrogate):
            chosen, value = _linear_branch_and_bound(objective.b, adj, K)
        else:
            chosen, value = _quadratic_branch_and_bound(objective.Q, adj, K)
        if chosen is None:
            raise InfeasibleError(f"No K={K} subset satisfies the {C.M} diversity constraints")
        action = ActionVector.from_indices(L, chosen)
        return IpResult(action=action, value=objective.value(action.bits), exact=True)
    rng = rng if rng is not None else np.random.default_rng(0)
    chosen, _ = _heuristic(objective.as_matrix(), adj, K, rng, restarts)
    action = ActionVector.from_indices(L, chosen)
    logger.debug(f"Heuristic IP solve (L={L}, K={K})")
    return IpResult(action=action, value=objective.value(action.bits), exact=False)
