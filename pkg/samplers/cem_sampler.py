"""
CEM-PPO sampler over a per-arm Bernoulli parameter vector.

Actions are drawn with gumbel top-K over the Bernoulli logits, so every
draw has exactly K arms. Within an epoch of N samples, each interval of n
samples runs a few ascent steps on an unclipped PPO objective for the
interval parameters; at the end of the epoch the elite fraction (half from
the shared elite buffer) plus the elite archive update mu with decay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
import torch
from scipy.special import expit, logit

from core.errors import InvalidInputError
from core.types import ActionVector, EliteSample, Hyperparameters, SamplerId
from samplers.base import Sampler
from samplers.context import RoundContext
from samplers.gumbel import orderings, sample_from_log_weights, subset_log_prob

ProbForm = Literal["factorized", "topk"]


@dataclass
class CemConfig:
    N: int = 50
    n: int = 10
    beta_kl: float = 0.1
    beta_mix: float = 0.3
    eps_mu: float = 0.01
    archive_size: int = 20
    ascent_steps: int = 5
    ascent_lr: float = 0.05
    prob_form: ProbForm = "factorized"
    m_perms: int = 10


@dataclass
class CemState:
    mu: np.ndarray
    u_old: np.ndarray
    u_new: np.ndarray
    archive: list[tuple[float, ActionVector]] = field(default_factory=list)

    @classmethod
    def initial(cls, L: int, K: int) -> "CemState":
        mu = np.full(L, K / L)
        return cls(mu=mu, u_old=mu.copy(), u_new=mu.copy())


# ============================================================================
# SAMPLING AND OBJECTIVE
# ============================================================================


def cem_sample(u: np.ndarray, K: int, rng: np.random.Generator, m_perms: int = 1) -> ActionVector:
    """Exactly-K draw: gumbel top-K over the Bernoulli logits of ``u``."""
    return sample_from_log_weights(logit(np.asarray(u, dtype=np.float64)), K, m_perms, rng).action


def bernoulli_kl(p, q):
    """Per-component KL(Bern(p) || Bern(q)); works on numpy arrays and tensors."""
    if isinstance(p, torch.Tensor) or isinstance(q, torch.Tensor):
        return p * torch.log(p / q) + (1 - p) * torch.log((1 - p) / (1 - q))
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    return p * np.log(p / q) + (1 - p) * np.log((1 - p) / (1 - q))


def action_probs(u: torch.Tensor, bits: torch.Tensor) -> torch.Tensor:
    """P(A_i | u) = u_i where A_i = 1, else 1 - u_i."""
    return torch.where(bits > 0, u, 1 - u)


def ppo_objective(
    u_new: torch.Tensor,
    u_old: torch.Tensor,
    bits: torch.Tensor,
    scores: torch.Tensor,
    b: float,
    beta_kl: float,
    form: ProbForm = "factorized",
    perms: Sequence[torch.Tensor] | None = None,
) -> torch.Tensor:
    """Importance-weighted advantage minus a KL penalty toward ``u_old``."""
    advantage = scores - b
    n = bits.shape[0]
    if form == "factorized":
        ratio = action_probs(u_new, bits) / action_probs(u_old, bits)
        surrogate = (ratio * advantage.unsqueeze(1)).sum() / n
    elif form == "topk":
        if perms is None:
            raise InvalidInputError("topk probability form needs the orderings of each sample")
        lw_new = torch.log(u_new / (1 - u_new))
        lw_old = torch.log(u_old / (1 - u_old))
        log_ratio = torch.stack([subset_log_prob(lw_new, p) - subset_log_prob(lw_old, p) for p in perms])
        surrogate = (torch.exp(log_ratio) * advantage).sum() / n
    else:
        raise InvalidInputError(f"Unknown probability form: {form}")
    return surrogate - beta_kl * bernoulli_kl(u_old, u_new).sum()


def ppo_interval_update(
    u_new: np.ndarray,
    u_old: np.ndarray,
    actions: Sequence[ActionVector],
    scores: Sequence[float],
    config: CemConfig,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """A few projected ascent steps on the PPO objective; returns the new interval parameters."""
    if not actions:
        return np.asarray(u_new, dtype=np.float64)
    bits = torch.from_numpy(np.stack([a.bits for a in actions]).astype(np.float64))
    s = torch.as_tensor(np.asarray(scores, dtype=np.float64))
    b = float(s.mean())
    old = torch.from_numpy(np.asarray(u_old, dtype=np.float64))
    perms = None
    if config.prob_form == "topk":
        rng = rng or np.random.default_rng()
        perms = [torch.from_numpy(orderings(a.indices, config.m_perms, rng)) for a in actions]
    u = torch.tensor(np.asarray(u_new, dtype=np.float64), requires_grad=True)
    for _ in range(config.ascent_steps):
        objective = ppo_objective(u, old, bits, s, b, config.beta_kl, config.prob_form, perms)
        (grad,) = torch.autograd.grad(objective, u)
        with torch.no_grad():
            u.add_(config.ascent_lr * grad).clamp_(config.eps_mu, 1 - config.eps_mu)
    return u.detach().numpy().copy()


def epoch_update(
    mu: np.ndarray,
    actions: Sequence[ActionVector],
    scores: Sequence[float],
    rho: float,
    beta_mix: float,
    eps_mu: float,
    global_elites: Sequence[tuple[float, ActionVector]] = (),
    archive: Sequence[tuple[float, ActionVector]] = (),
) -> np.ndarray:
    """Elite-mean update of mu with decay and clipping."""
    if not actions:
        return np.asarray(mu, dtype=np.float64)
    n_elite = max(1, math.ceil(rho * len(actions)))
    from_global = sorted(global_elites, key=lambda e: -e[0])[: n_elite // 2]
    own_order = np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")
    own = [actions[i] for i in own_order[: n_elite - len(from_global)]]
    elites = own + [a for _, a in from_global] + [a for _, a in archive]
    mu_new = np.mean(np.stack([a.bits for a in elites]).astype(np.float64), axis=0)
    mixed = beta_mix * np.asarray(mu, dtype=np.float64) + (1 - beta_mix) * mu_new
    return np.clip(mixed, eps_mu, 1 - eps_mu)


def update_archive(
    archive: list[tuple[float, ActionVector]], actions: Sequence[ActionVector], scores: Sequence[float], size: int
) -> list[tuple[float, ActionVector]]:
    """Best distinct actions seen so far, descending by score."""
    best: dict[bytes, tuple[float, ActionVector]] = {a.key: (s, a) for s, a in archive}
    for a, s in zip(actions, scores):
        if a.key not in best or best[a.key][0] < s:
            best[a.key] = (float(s), a)
    return sorted(best.values(), key=lambda e: -e[0])[:size]


# ============================================================================
# SAMPLER
# ============================================================================


class CemSampler(Sampler):
    sampler_id = SamplerId.CEM
    supports_demonstration = True

    def __init__(self, hparams: Hyperparameters, rng: np.random.Generator, config: CemConfig | None = None):
        super().__init__(hparams, rng)
        self.config = config or CemConfig()
        self.state = CemState.initial(hparams.L, hparams.K)
        self._interval: list[tuple[ActionVector, float]] = []
        self._epoch: list[tuple[ActionVector, float]] = []
        self._global: list[tuple[float, ActionVector]] = []
        self._demo_logits: torch.Tensor | None = None

    def propose(self, ctx: RoundContext, quota: int) -> list[EliteSample]:
        if quota <= 0:
            return []
        actions = [cem_sample(self.state.u_new, self.hparams.K, self.rng) for _ in range(quota)]
        return self.make_elites(ctx, actions)

    def _absorb(self, action: ActionVector, score: float) -> None:
        cfg = self.config
        self._interval.append((action, score))
        self._epoch.append((action, score))
        if len(self._interval) >= cfg.n:
            acts, scores = zip(*self._interval)
            self.state.u_new = ppo_interval_update(self.state.u_new, self.state.u_old, acts, scores, cfg, self.rng)
            self.state.u_old = self.state.u_new.copy()
            self._interval = []
        if len(self._epoch) >= cfg.N:
            acts, scores = zip(*self._epoch)
            self.state.mu = epoch_update(
                self.state.mu,
                acts,
                scores,
                self.hparams.rho,
                cfg.beta_mix,
                cfg.eps_mu,
                global_elites=self._global,
                archive=self.state.archive,
            )
            self.state.archive = update_archive(self.state.archive, acts, scores, cfg.archive_size)
            self.state.u_new = self.state.mu.copy()
            self.state.u_old = self.state.mu.copy()
            self._epoch = []
            self._interval = []

    def record(self, ctx: RoundContext, samples: Sequence[EliteSample]) -> None:
        if ctx.buffers is not None:
            self._global = [(e.surrogate_score - self.hparams.lam * e.violation_rate, e.action) for e in ctx.buffers.elites]
        for s in samples:
            self._absorb(s.action, s.surrogate_score - self.hparams.lam * s.violation_rate)

    def train(self, ctx: RoundContext) -> None:
        if ctx.standalone:
            return
        actions = [cem_sample(self.state.u_new, self.hparams.K, self.rng) for _ in range(self.config.N)]
        for a, f in zip(actions, ctx.score(actions)):
            self._absorb(a, float(f))
        self.logger.debug(
            f"CEM imagined epoch at t={ctx.t}: mu range [{self.state.mu.min():.3f}, {self.state.mu.max():.3f}], "
            f"archive={len(self.state.archive)}"
        )

    # ------------------------------------------------------------------
    # Co-training: logit(mu) is the trainable head
    # ------------------------------------------------------------------

    def demonstration_parameters(self) -> list[torch.Tensor]:
        self._demo_logits = torch.tensor(logit(self.state.mu), dtype=torch.float64, requires_grad=True)
        return [self._demo_logits]

    def real_output(self, ctx: RoundContext) -> torch.Tensor:
        if self._demo_logits is None:
            return torch.from_numpy(self.state.mu.copy())
        return torch.sigmoid(self._demo_logits)

    def after_demonstration(self) -> None:
        if self._demo_logits is None:
            return
        eps = self.config.eps_mu
        self.state.mu = np.clip(expit(self._demo_logits.detach().numpy()), eps, 1 - eps)
        self.state.u_new = self.state.mu.copy()
        self.state.u_old = self.state.mu.copy()
        self._demo_logits = None
