"""
Primal-dual Wolpertinger sampler.

Features:
- Deterministic actor maps the arm-selection state to a proto-action
- Count-based UCB bonus on master recommendations, then top-K binarization
- Random one-in/one-out swaps around the binarized proto, ranked by a critic
- RCPO dual ascent on the constraint multiplier lambda2
- Actor-critic training from a clustered, extreme-prioritized replay buffer
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
from torch import nn

from core.scoring import binarize_top_k
from core.types import ActionVector, EliteSample, Hyperparameters, SamplerId
from samplers.base import Sampler, reset_parameters
from samplers.context import RoundContext
from samplers.replay_buffer import ClusteredReplayBuffer, ReplayEntry

IMAGINED_NOISE = 0.1


@dataclass
class WolpertingerConfig:
    kappa: float = 0.1
    n_swaps: int = 10
    alpha_c: float = 0.02
    lr_dual: float = 0.01
    hidden: int = 64
    actor_lr: float = 1e-3
    critic_lr: float = 1e-3
    tau_soft: float = 0.01
    capacity: int = 10_000
    batch_size: int = 60
    train_steps: int = 10
    discount: float = 0.0
    imagined: int = 32
    prioritized: bool = True


class Actor(nn.Module):
    def __init__(self, L: int, hidden: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(L, hidden), nn.Tanh(), nn.Linear(hidden, hidden), nn.Tanh(), nn.Linear(hidden, L), nn.Sigmoid()
        )
        self.double()

    def forward(self, state: torch.Tensor) -> torch.Tensor:
        return self.net(state)


class Critic(nn.Module):
    def __init__(self, L: int, hidden: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(2 * L, hidden), nn.Tanh(), nn.Linear(hidden, hidden), nn.Tanh(), nn.Linear(hidden, 1)
        )
        self.double()

    def forward(self, state: torch.Tensor, action: torch.Tensor) -> torch.Tensor:
        return self.net(torch.cat([state, action], dim=-1)).squeeze(-1)


def rcpo_dual_step(lambda2: float, c_mean: float, alpha: float, lr: float) -> float:
    """Projected ascent on the constraint multiplier."""
    return max(0.0, lambda2 + lr * (c_mean - alpha))


def ucb_bonus(t: int, counts: np.ndarray, kappa: float) -> np.ndarray:
    return kappa * np.sqrt(math.log(max(t, 1)) / (1.0 + np.asarray(counts, dtype=np.float64)))


def random_swaps(base: ActionVector, n_swaps: int, rng: np.random.Generator) -> list[ActionVector]:
    """``n_swaps`` neighbours of ``base``, each trading one selected arm for one unselected arm."""
    ones = base.indices
    zeros = np.flatnonzero(base.bits == 0)
    if ones.size == 0 or zeros.size == 0:
        return []
    out = []
    for _ in range(n_swaps):
        bits = base.bits.copy()
        bits[rng.choice(ones)] = 0
        bits[rng.choice(zeros)] = 1
        out.append(ActionVector(bits))
    return out


def soft_update(target: nn.Module, source: nn.Module, tau: float) -> None:
    with torch.no_grad():
        for tp, sp in zip(target.parameters(), source.parameters()):
            tp.mul_(1.0 - tau).add_(tau * sp)


class WolpertingerSampler(Sampler):
    sampler_id = SamplerId.WOLPERTINGER
    supports_demonstration = True

    def __init__(self, hparams: Hyperparameters, rng: np.random.Generator, config: WolpertingerConfig | None = None):
        super().__init__(hparams, rng)
        self.config = cfg = config or WolpertingerConfig()
        L = hparams.L
        self.actor = Actor(L, cfg.hidden)
        self.critic = Critic(L, cfg.hidden)
        reset_parameters(self.actor, rng)
        reset_parameters(self.critic, rng)
        self.target_actor = copy.deepcopy(self.actor)
        self.target_critic = copy.deepcopy(self.critic)
        self.actor_opt = torch.optim.Adam(self.actor.parameters(), lr=cfg.actor_lr)
        self.critic_opt = torch.optim.Adam(self.critic.parameters(), lr=cfg.critic_lr)
        self.replay = ClusteredReplayBuffer(cfg.capacity, hparams.cluster_count, rng, prioritized=cfg.prioritized)

        self.lambda2 = 0.0
        self.selection_counts = np.zeros(L)
        self.state = np.full(L, 1.0 / L)
        self._epoch = 0
        self._pending: list[tuple[np.ndarray, np.ndarray, float, float, float]] = []
        self._violations: list[float] = []
        self._last_recommended_t = 0

    # ------------------------------------------------------------------
    # Proposal
    # ------------------------------------------------------------------

    def proto_action(self) -> np.ndarray:
        with torch.no_grad():
            return self.actor(torch.from_numpy(self.state)).numpy()

    def candidates(self, ctx: RoundContext) -> list[ActionVector]:
        proto = self.proto_action()
        if ctx.recommend_counts is not None:
            proto = proto + ucb_bonus(ctx.t, ctx.recommend_counts, self.config.kappa)
        base = binarize_top_k(proto, self.hparams.K)
        unique = {base.key: base}
        for a in random_swaps(base, self.config.n_swaps, self.rng):
            unique.setdefault(a.key, a)
        return list(unique.values())

    def critic_values(self, actions: Sequence[ActionVector]) -> np.ndarray:
        bits = torch.from_numpy(np.stack([a.bits for a in actions]).astype(np.float64))
        state = torch.from_numpy(self.state).expand(len(actions), -1)
        with torch.no_grad():
            return self.critic(state, bits).numpy()

    def propose(self, ctx: RoundContext, quota: int) -> list[EliteSample]:
        if quota <= 0:
            return []
        pool = self.candidates(ctx)
        order = np.argsort(-self.critic_values(pool), kind="stable")[:quota]
        return self.make_elites(ctx, [pool[i] for i in order])

    # ------------------------------------------------------------------
    # Feedback and state
    # ------------------------------------------------------------------

    def _roll_epoch(self, t: int) -> None:
        epoch = t // self.hparams.length_epoch
        if epoch <= self._epoch:
            return
        self._epoch = epoch
        total = self.selection_counts.sum()
        next_state = self.selection_counts / total if total > 0 else np.full(self.hparams.L, 1.0 / self.hparams.L)
        for state, bits, composite, u, c in self._pending:
            self.replay.push(ReplayEntry(state, bits, composite, next_state, u, c))
        self._pending = []
        self.state = next_state

    def _queue(self, bits: np.ndarray, composite: float, u: float, c: float) -> None:
        self._pending.append((self.state, bits.astype(np.float64), composite, u, c))

    def record(self, ctx: RoundContext, samples: Sequence[EliteSample]) -> None:
        self._roll_epoch(ctx.t)
        for s in samples:
            self.selection_counts += s.action.bits
            self._violations.append(s.violation_rate)
            self._queue(s.action.bits, s.surrogate_score - self.lambda2 * s.violation_rate, s.surrogate_score, s.violation_rate)

    def _ingest_recommended(self, ctx: RoundContext) -> None:
        if ctx.buffers is None:
            return
        for entry in ctx.buffers.recommended:
            if entry.t <= self._last_recommended_t:
                continue
            self._last_recommended_t = entry.t
            self._queue(entry.action.bits, entry.reward - self.lambda2 * entry.violation, entry.reward, entry.violation)

    def _imagine(self, ctx: RoundContext) -> None:
        proto = self.proto_action()
        actions = [
            binarize_top_k(proto + self.rng.normal(0.0, IMAGINED_NOISE, size=proto.size), self.hparams.K)
            for _ in range(self.config.imagined)
        ]
        scores = ctx.score(actions, lam=self.lambda2)
        u = ctx.surrogate(actions)
        for a, f, ui in zip(actions, scores, u):
            c = ctx.violation(a)
            self.replay.push(ReplayEntry(self.state, a.bits.astype(np.float64), float(f), self.state, float(ui), c))

    # ------------------------------------------------------------------
    # Training
    # ------------------------------------------------------------------

    def train_step(self, batch: Sequence[ReplayEntry]) -> float:
        """One critic regression step and one actor ascent step; returns the critic loss."""
        if not batch:
            return 0.0
        s = torch.from_numpy(np.stack([e.state for e in batch]))
        a = torch.from_numpy(np.stack([e.action for e in batch]))
        y = torch.tensor([e.composite for e in batch], dtype=torch.float64)
        if self.config.discount > 0:
            s_next = torch.from_numpy(np.stack([e.state if e.next_state is None else e.next_state for e in batch]))
            with torch.no_grad():
                y = y + self.config.discount * self.target_critic(s_next, self.target_actor(s_next))

        critic_loss = nn.functional.mse_loss(self.critic(s, a), y)
        self.critic_opt.zero_grad()
        critic_loss.backward()
        self.critic_opt.step()

        actor_loss = -self.critic(s, self.actor(s)).mean()
        self.actor_opt.zero_grad()
        actor_loss.backward()
        self.actor_opt.step()

        soft_update(self.target_critic, self.critic, self.config.tau_soft)
        soft_update(self.target_actor, self.actor, self.config.tau_soft)
        return float(critic_loss.detach())

    def train(self, ctx: RoundContext) -> None:
        self._roll_epoch(ctx.t)
        self._ingest_recommended(ctx)
        if self._violations:
            self.lambda2 = rcpo_dual_step(
                self.lambda2, float(np.mean(self._violations)), self.config.alpha_c, self.config.lr_dual
            )
            self._violations = []
        if not ctx.standalone and self.config.imagined > 0:
            self._imagine(ctx)
        if len(self.replay) == 0:
            return
        self.replay.recluster()
        losses = [self.train_step(self.replay.sample_batch(self.config.batch_size)) for _ in range(self.config.train_steps)]
        self.logger.debug(
            f"Wolpertinger update at t={ctx.t}: critic loss {np.mean(losses):.5f}, lambda2={self.lambda2:.4f}, "
            f"replay={len(self.replay)}"
        )

    # ------------------------------------------------------------------
    # Co-training
    # ------------------------------------------------------------------

    def real_output(self, ctx: RoundContext) -> torch.Tensor:
        return self.actor(torch.from_numpy(self.state))

    def demonstration_parameters(self) -> list[torch.Tensor]:
        return list(self.actor.parameters())
