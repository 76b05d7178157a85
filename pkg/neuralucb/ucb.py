"""
NeuralUCB reward estimator.

Features:
- Optimistic score U = mean + gamma_t * sqrt(g^T Z^-1 g / m)
- Ridge-regularized gradient-descent refit after every observation
- Design matrix kept full (Sherman-Morrison inverse) or diagonal
- Discounted variant for non-stationary feedback
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import torch
from scipy import linalg

from core.errors import InternalError, InvalidInputError
from neuralucb.network import (
    NetworkParams,
    batch_forward,
    batch_grad,
    check_normalized,
    init_params,
    network_output,
    pad_input,
)

logger = logging.getLogger(__name__)

FULL_DESIGN_LIMIT = 4096
INVERSE_TOLERANCE = 1e-8
SCORE_CHUNK = 1024


@dataclass
class UcbConfig:
    width: int = 32
    depth: int = 2
    steps: int = 100
    lr: float = 1e-3
    ridge: float = 1.0
    nu: float = 1.0
    delta: float = 0.1
    floor: float = 0.0
    warm_start: bool = False
    design: Literal["auto", "full", "diagonal"] = "auto"
    refresh_every: int = 500
    loss: Literal["mean", "sum"] = "mean"


@dataclass
class UcbState:
    params: NetworkParams
    theta0: torch.Tensor
    Z: np.ndarray
    Z_inv: np.ndarray
    log_det: float
    gamma_t: float
    lambda1: float
    eta: float
    J: int
    diagonal: bool
    history_x: list[torch.Tensor] = field(default_factory=list)
    history_r: list[float] = field(default_factory=list)
    updates_since_refresh: int = 0

    @property
    def t(self) -> int:
        return len(self.history_r)


@dataclass
class DiscountSpec:
    gamma_ns: float
    Z_tilde: np.ndarray
    alpha_const: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.gamma_ns < 1.0:
            raise InvalidInputError(f"gamma_ns must be in (0, 1), got {self.gamma_ns}")


def discounted_design_step(
    Z: np.ndarray, Z_tilde: np.ndarray, g: np.ndarray, m: int, gamma: float, lam: float
) -> tuple[np.ndarray, np.ndarray]:
    """One step of the two discounted recursions (diagonal arrays are handled elementwise)."""
    if Z.ndim == 1:
        outer = g * g / m
        ridge = 1.0
    else:
        outer = np.outer(g, g) / m
        ridge = np.eye(Z.shape[0])
    Z_new = gamma * Z + outer + (1.0 - gamma) * lam * ridge
    Zt_new = gamma * Z_tilde + outer + (1.0 - gamma**2) * lam * ridge
    return Z_new, Zt_new


class NeuralUCB:
    """Stationary NeuralUCB; owns one UcbState."""

    def __init__(self, L: int, config: UcbConfig | None = None, seed: int | np.random.Generator = 0):
        self.config = config or UcbConfig()
        self.L = L
        params = init_params(L, self.config.width, self.config.depth, seed)
        p = params.num_params
        diagonal = self._use_diagonal(p)
        lam = self.config.ridge
        Z = np.full(p, lam) if diagonal else lam * np.eye(p)
        Z_inv = np.full(p, 1.0 / lam) if diagonal else np.eye(p) / lam
        self.state = UcbState(
            params=params,
            theta0=params.theta.detach().clone(),
            Z=Z,
            Z_inv=Z_inv,
            log_det=p * math.log(lam),
            gamma_t=0.0,
            lambda1=lam,
            eta=self.config.lr,
            J=self.config.steps,
            diagonal=diagonal,
        )
        self.state.gamma_t = self._radius()
        logger.info(
            f"✅ NeuralUCB ready: p={p}, width={self.config.width}, depth={self.config.depth}, "
            f"design={'diagonal' if diagonal else 'full'}"
        )

    def _use_diagonal(self, p: int) -> bool:
        if self.config.design == "auto":
            return p > FULL_DESIGN_LIMIT
        return self.config.design == "diagonal"

    @property
    def num_params(self) -> int:
        return self.state.params.num_params

    # ------------------------------------------------------------------
    # Scoring
    # ------------------------------------------------------------------

    def _variance(self, G: np.ndarray) -> np.ndarray:
        s = self.state
        if s.diagonal:
            quad = np.einsum("ij,ij->i", G * G, np.broadcast_to(s.Z_inv, G.shape))
        else:
            quad = np.einsum("ij,ij->i", G @ s.Z_inv, G)
        return np.sqrt(np.maximum(quad, 0.0) / s.params.width)

    def _score_rows(self, X: torch.Tensor) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        mean = batch_forward(self.state.params, X).numpy()
        chunks = [
            self._variance(batch_grad(self.state.params, X[i : i + SCORE_CHUNK]).numpy())
            for i in range(0, X.shape[0], SCORE_CHUNK)
        ]
        var = np.concatenate(chunks) if chunks else np.zeros(0)
        return mean, var, mean + self.exploration_radius * var

    @property
    def exploration_radius(self) -> float:
        return self.state.gamma_t

    def ucb(self, x) -> tuple[float, float, float]:
        check_normalized(x)
        mean, var, U = self._score_rows(pad_input(self.state.params, np.atleast_2d(x)))
        return float(mean[0]), float(var[0]), float(U[0])

    def ucb_batch(self, X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        X = np.atleast_2d(X)
        check_normalized(X)
        return self._score_rows(pad_input(self.state.params, X))

    def raw_ucb(self, X) -> np.ndarray:
        """U at arbitrary rows (not necessarily unit norm)."""
        return self._score_rows(pad_input(self.state.params, np.atleast_2d(X)))[2]

    # ------------------------------------------------------------------
    # Learning
    # ------------------------------------------------------------------

    def update(self, x, r: float) -> None:
        check_normalized(x)
        s = self.state
        xt = pad_input(s.params, np.asarray(x, dtype=np.float64))
        g = batch_grad(s.params, xt[None, :])[0].numpy()
        self._update_design(g)
        s.history_x.append(xt)
        s.history_r.append(float(r))
        self._fit(self._sample_weights(), ridge_weight=1.0)
        s.gamma_t = self._radius()
        logger.debug(f"NeuralUCB update t={s.t}: r={r:.4f}, gamma_t={s.gamma_t:.4f}")

    def _update_design(self, g: np.ndarray) -> None:
        s = self.state
        m = s.params.width
        if s.diagonal:
            s.log_det += float(np.sum(np.log1p(g * g / m / s.Z)))
            s.Z = s.Z + g * g / m
            s.Z_inv = 1.0 / s.Z
            return
        u = g / math.sqrt(m)
        Zu = s.Z_inv @ u
        denom = 1.0 + float(u @ Zu)
        s.Z = s.Z + np.outer(u, u)
        s.Z_inv = s.Z_inv - np.outer(Zu, Zu) / denom
        s.log_det += math.log(denom)
        s.updates_since_refresh += 1
        if s.updates_since_refresh >= self.config.refresh_every:
            self.refresh_inverse()

    def refresh_inverse(self) -> None:
        """Recompute Z^-1 and log det Z from scratch."""
        s = self.state
        if s.diagonal:
            s.Z_inv = 1.0 / s.Z
            s.log_det = float(np.sum(np.log(s.Z)))
            return
        try:
            factor = linalg.cho_factor(s.Z, lower=True)
        except linalg.LinAlgError as e:
            raise InternalError(f"Design matrix is not positive definite: {e}") from e
        s.Z_inv = linalg.cho_solve(factor, np.eye(s.Z.shape[0]))
        s.Z_inv = 0.5 * (s.Z_inv + s.Z_inv.T)
        s.log_det = float(2.0 * np.sum(np.log(np.diag(factor[0]))))
        s.updates_since_refresh = 0
        residual = float(np.max(np.abs(s.Z_inv @ s.Z - np.eye(s.Z.shape[0]))))
        if residual > INVERSE_TOLERANCE:
            logger.warning(f"⚠️ Design inverse residual {residual:.2e} after refresh")

    def _sample_weights(self) -> torch.Tensor:
        return torch.ones(self.state.t, dtype=torch.float64)

    def _fit(self, weights: torch.Tensor, ridge_weight: float) -> None:
        """J descent steps on sum_i w_i (h(x_i) - r_i)^2 / 2 + ridge_weight * m * lambda1 ||theta - theta0||^2 / 2."""
        s = self.state
        if s.J == 0 or s.t == 0:
            return
        start = s.params.theta if self.config.warm_start else s.theta0
        theta = start.detach().clone().requires_grad_(True)
        X = torch.stack(s.history_x)
        r = torch.tensor(s.history_r, dtype=torch.float64)
        scale = 1.0 / float(weights.sum()) if self.config.loss == "mean" else 1.0
        ridge = ridge_weight * s.params.width * s.lambda1
        shapes, width = s.params.shapes, s.params.width
        optimizer = torch.optim.SGD([theta], lr=s.eta)
        for _ in range(s.J):
            optimizer.zero_grad()
            residual = network_output(theta, X, shapes, width) - r
            loss = 0.5 * (weights * residual**2).sum() + 0.5 * ridge * ((theta - s.theta0) ** 2).sum()
            (scale * loss).backward()
            optimizer.step()
        s.params.theta = theta.detach()

    def _radius(self) -> float:
        s = self.state
        p = s.params.num_params
        inner = s.log_det - p * math.log(s.lambda1) + 2.0 * math.log(1.0 / self.config.delta)
        return self.config.nu * math.sqrt(max(inner, 0.0)) + self.config.floor


class DiscountedNeuralUCB(NeuralUCB):
    """Non-stationary variant with geometrically forgotten observations."""

    def __init__(
        self,
        L: int,
        config: UcbConfig | None = None,
        seed: int | np.random.Generator = 0,
        gamma_ns: float = 0.99,
        alpha_const: float = 1.0,
    ):
        self.discount = DiscountSpec(gamma_ns=gamma_ns, Z_tilde=np.empty(0), alpha_const=alpha_const)
        super().__init__(L, config, seed)
        self.discount.Z_tilde = self.state.Z.copy()

    def _variance(self, G: np.ndarray) -> np.ndarray:
        s = self.state
        Zt = self.discount.Z_tilde
        if s.diagonal:
            quad = np.einsum("ij,ij->i", G * G, np.broadcast_to(Zt * s.Z_inv * s.Z_inv, G.shape))
        else:
            Y = G @ s.Z_inv
            quad = np.einsum("ij,ij->i", Y @ Zt, Y)
        return np.sqrt(np.maximum(quad, 0.0) / s.params.width)

    def _update_design(self, g: np.ndarray) -> None:
        s = self.state
        s.Z, self.discount.Z_tilde = discounted_design_step(
            s.Z, self.discount.Z_tilde, g, s.params.width, self.discount.gamma_ns, s.lambda1
        )
        self.refresh_inverse()

    def _sample_weights(self) -> torch.Tensor:
        # gamma^(t - i) for i = 1..t: the gamma^-i weights rescaled by gamma^t
        exponents = torch.arange(self.state.t - 1, -1, -1, dtype=torch.float64)
        return self.discount.gamma_ns**exponents

    def _radius(self) -> float:
        return self.discount.alpha_const
