"""
Solver sampler.

Reads a linear and a quadratic approximation off the master's surrogate,
solves the two constrained integer programs, and spreads the two solutions
with beta perturbations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from core.errors import ConfigurationError, InfeasibleError, InvalidInputError
from core.scoring import binarize_top_k
from core.types import ActionVector, EliteSample, Hyperparameters, SamplerId
from samplers.base import Sampler
from samplers.context import RoundContext
from samplers.ip_solver import IpResult, LinearSurrogate, QuadraticSurrogate, solve_ip

RowOracle = Callable[[np.ndarray], np.ndarray]

SQRT2 = math.sqrt(2.0)


@dataclass
class SolverConfig:
    exact_limit: int = 40
    restarts: int = 8


# ============================================================================
# SURROGATE EXTRACTION
# ============================================================================


def extract_first_order(oracle: RowOracle, L: int) -> LinearSurrogate:
    """b_i = oracle(e_i)."""
    return LinearSurrogate(np.asarray(oracle(np.eye(L)), dtype=np.float64).reshape(L))


def extract_second_order(oracle: RowOracle, b: LinearSurrogate) -> QuadraticSurrogate:
    """Recover Q from oracle reads at 0, sqrt(2) e_i and (e_i + e_j) / sqrt(2)."""
    L = b.b.size
    iu, ju = np.triu_indices(L, k=1)
    pairs = np.zeros((iu.size, L))
    pairs[np.arange(iu.size), iu] = 1.0 / SQRT2
    pairs[np.arange(iu.size), ju] = 1.0 / SQRT2
    X = np.vstack([np.zeros((1, L)), SQRT2 * np.eye(L), pairs])
    out = np.asarray(oracle(X), dtype=np.float64).reshape(-1)
    e = float(out[0])
    o_diag = out[1 : L + 1]
    o_pair = out[L + 1 :]
    bv = b.b
    Q = np.zeros((L, L))
    Q[np.diag_indices(L)] = (o_diag - SQRT2 * (bv - e) - e) / (2.0 - SQRT2)
    off = (
        o_pair
        + (SQRT2 / 4.0) * (o_diag[iu] + o_diag[ju])
        - ((1.0 + SQRT2) / 2.0) * (bv[iu] + bv[ju])
        + (SQRT2 / 2.0) * e
    )
    Q[iu, ju] = off
    Q[ju, iu] = off
    return QuadraticSurrogate(Q=Q, e0=e)


def beta_perturb(
    elite: ActionVector, eps0: float, count: int, rng: np.random.Generator
) -> list[ActionVector]:
    """Clip bits to [eps0, 1 - eps0], redraw each from Beta(v, 1 - v), keep the top K."""
    if not 0.0 < eps0 < 0.5:
        raise InvalidInputError(f"eps0 must be in (0, 0.5), got {eps0}")
    if count <= 0:
        return []
    v = np.clip(elite.bits.astype(np.float64), eps0, 1.0 - eps0)
    draws = rng.beta(v, 1.0 - v, size=(count, v.size))
    return [binarize_top_k(row, elite.K) for row in draws]


# ============================================================================
# SAMPLER
# ============================================================================


class SolverSampler(Sampler):
    """
    Extracts b and Q from the surrogate and solves both programs once per
    training call (every f_in rounds). Rounds in between reuse the cached
    solutions; only the beta perturbations are redrawn and every proposal
    is scored under the current surrogate.
    """

    sampler_id = SamplerId.SOLVER

    def __init__(self, hparams: Hyperparameters, rng: np.random.Generator, config: SolverConfig | None = None):
        super().__init__(hparams, rng)
        self.config = config or SolverConfig()
        self.solutions: list[IpResult] = []
        self._stale = True
        self.last_linear: LinearSurrogate | None = None

    def _refresh(self, ctx: RoundContext) -> None:
        hp = self.hparams
        b = extract_first_order(ctx.oracle.raw, hp.L)
        Q = extract_second_order(ctx.oracle.raw, b)
        self.last_linear = b
        solutions = []
        for objective in (b, Q):
            try:
                solutions.append(
                    solve_ip(
                        objective,
                        ctx.constraints,
                        hp.K,
                        exact_limit=self.config.exact_limit,
                        rng=self.rng,
                        restarts=self.config.restarts,
                    )
                )
            except InfeasibleError as e:
                self.logger.warning(f"⚠️ Solver sampler skipped at t={ctx.t}: {e}")
                break
        self.solutions = solutions
        self._stale = False
        if solutions:
            kinds = "exact" if all(s.exact for s in solutions) else "heuristic"
            self.logger.debug(f"Solver refreshed at t={ctx.t} ({kinds}): values {[round(s.value, 4) for s in solutions]}")

    def propose(self, ctx: RoundContext, quota: int) -> list[EliteSample]:
        if ctx.standalone:
            raise ConfigurationError("The solver sampler needs the master's surrogate")
        if quota <= 0:
            return []
        if self._stale:
            self._refresh(ctx)
        bases = [s.action for s in self.solutions]
        if not bases:
            return []
        actions = bases[:quota]
        extra = quota - len(actions)
        if extra > 0:
            # split the perturbations evenly between the two solutions
            counts = [extra // len(bases) + (1 if i < extra % len(bases) else 0) for i in range(len(bases))]
            for base, count in zip(bases, counts):
                actions.extend(beta_perturb(base, self.hparams.eps0, count, self.rng))
        return self.make_elites(ctx, actions)

    def train(self, ctx: RoundContext) -> None:
        self._stale = True
