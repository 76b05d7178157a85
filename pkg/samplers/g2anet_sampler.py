"""
Two-stage attention sampler and the gumbel top-K REINFORCE baseline.

Each arm is a graph node. A hard stage decides, per pair of arms, whether
they interact (straight-through gumbel-softmax); a soft stage weights the
interacting neighbours. A per-arm head turns the node and its aggregated
neighbourhood into a score in (0, 1), from which K-subsets are drawn with
gumbel top-K and trained with REINFORCE on composite feedback.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
from torch import nn

from core.types import EliteSample, FeatureMatrix, Hyperparameters, SamplerId
from samplers.base import Sampler, reset_parameters
from samplers.context import RoundContext
from samplers.gumbel import PROB_CLIP, SubsetDraw, gumbel_topk_sample, sample_from_log_weights, subset_log_prob


@dataclass
class G2ANetConfig:
    hidden: int = 32
    temperature: float = 1.0
    anneal: float = 0.995
    temperature_floor: float = 0.1
    m_perms: int = 10
    lr: float = 1e-2
    imagined: int = 16


class TwoStageAttention(nn.Module):
    """Hard pairwise gates followed by gated soft attention, then a per-arm head."""

    def __init__(self, d: int, hidden: int):
        super().__init__()
        self.encoder = nn.Linear(d, hidden)
        self.pair_scorer = nn.Sequential(nn.Linear(2 * hidden, hidden), nn.Tanh(), nn.Linear(hidden, 2))
        self.query = nn.Linear(hidden, hidden, bias=False)
        self.key = nn.Linear(hidden, hidden, bias=False)
        self.head = nn.Sequential(nn.Linear(2 * hidden, hidden), nn.Tanh(), nn.Linear(hidden, 1))
        self.double()

    def hard_gates(self, h: torch.Tensor, noise: torch.Tensor | None, temperature: float) -> torch.Tensor:
        L = h.shape[0]
        pairs = torch.cat([h.unsqueeze(1).expand(L, L, -1), h.unsqueeze(0).expand(L, L, -1)], dim=-1)
        scores = self.pair_scorer(pairs)
        logits = scores + scores.transpose(0, 1)
        if noise is not None:
            logits = logits + noise
        soft = torch.softmax(logits / temperature, dim=-1)
        hard = nn.functional.one_hot(soft.argmax(dim=-1), num_classes=2).to(soft.dtype)
        return ((hard - soft).detach() + soft)[..., 1]

    def forward(
        self,
        features: torch.Tensor,
        noise: torch.Tensor | None = None,
        temperature: float = 1.0,
        gates: torch.Tensor | None = None,
    ) -> torch.Tensor:
        h = torch.tanh(self.encoder(features))
        if gates is None:
            gates = self.hard_gates(h, noise, temperature)
        attention = (self.query(h) @ self.key(h).T) * gates
        weights = torch.softmax(attention, dim=1)
        context = weights @ h
        return torch.sigmoid(self.head(torch.cat([h, context], dim=-1))).squeeze(-1)


def feature_tensor(features: FeatureMatrix | None, L: int) -> torch.Tensor:
    """Item features, or the one-hot identity when no context is available."""
    if features is None:
        return torch.eye(L, dtype=torch.float64)
    return torch.from_numpy(np.asarray(features.rows, dtype=np.float64))


def forward_attention(
    params: TwoStageAttention, F: torch.Tensor, rng: np.random.Generator, temperature: float = 1.0
) -> tuple[np.ndarray, torch.Tensor]:
    """Scores with freshly drawn gate noise; returns (out, noise)."""
    L = F.shape[0]
    noise = torch.from_numpy(rng.gumbel(size=(L, L, 2)))
    with torch.no_grad():
        out = params(F, noise, temperature)
    return out.numpy(), noise


def reinforce_update(parameters: Sequence[torch.Tensor], logprobs: torch.Tensor, feedbacks, lr: float) -> None:
    """One ascent step on sum_k (f_k - mean f) * log p_k."""
    f = torch.as_tensor(np.asarray(feedbacks, dtype=np.float64))
    advantage = f - f.mean()
    objective = (advantage * logprobs).sum()
    params = [p for p in parameters if p.requires_grad]
    grads = torch.autograd.grad(objective, params, allow_unused=True)
    with torch.no_grad():
        for p, g in zip(params, grads):
            if g is not None:
                p.add_(lr * g)


@dataclass
class _PendingDraw:
    draw: SubsetDraw
    noise: torch.Tensor | None
    feedback: float | None = None


class G2ANetSampler(Sampler):
    sampler_id = SamplerId.G2ANET
    supports_demonstration = True

    def __init__(
        self,
        hparams: Hyperparameters,
        rng: np.random.Generator,
        config: G2ANetConfig | None = None,
        features: FeatureMatrix | None = None,
    ):
        super().__init__(hparams, rng)
        self.config = config or G2ANetConfig()
        self.features = feature_tensor(features, hparams.L)
        self.network = TwoStageAttention(self.features.shape[1], self.config.hidden)
        reset_parameters(self.network, rng)
        self.temperature = self.config.temperature
        self._pending: dict[bytes, _PendingDraw] = {}
        self._batch: list[_PendingDraw] = []

    def _draw(self, count: int) -> list[_PendingDraw]:
        out, noise = forward_attention(self.network, self.features, self.rng, self.temperature)
        return [
            _PendingDraw(gumbel_topk_sample(out, self.hparams.K, self.config.m_perms, self.rng), noise)
            for _ in range(count)
        ]

    def propose(self, ctx: RoundContext, quota: int) -> list[EliteSample]:
        if quota <= 0:
            return []
        drawn = self._draw(quota)
        self._pending = {p.draw.action.key: p for p in drawn}
        return self.make_elites(ctx, [p.draw.action for p in drawn])

    def record(self, ctx: RoundContext, samples: Sequence[EliteSample]) -> None:
        for sample in samples:
            pending = self._pending.pop(sample.action.key, None)
            if pending is None:
                continue
            pending.feedback = sample.surrogate_score - self.hparams.lam * sample.violation_rate
            self._batch.append(pending)

    def train(self, ctx: RoundContext) -> None:
        if not ctx.standalone and self.config.imagined > 0:
            imagined = self._draw(self.config.imagined)
            scores = ctx.score([p.draw.action for p in imagined])
            for p, s in zip(imagined, scores):
                p.feedback = float(s)
            self._batch.extend(imagined)
        if len(self._batch) >= 2:
            logprobs = []
            for noise, group in _group_by_noise(self._batch):
                out = torch.clamp(self.network(self.features, noise, self.temperature), PROB_CLIP, 1.0 - PROB_CLIP)
                log_w = torch.log(out)
                logprobs.extend(subset_log_prob(log_w, torch.from_numpy(p.draw.perms)) for p in group)
            feedbacks = [p.feedback for _, group in _group_by_noise(self._batch) for p in group]
            reinforce_update(list(self.network.parameters()), torch.stack(logprobs), feedbacks, self.config.lr)
            self.temperature = max(self.config.temperature_floor, self.temperature * self.config.anneal)
            self.logger.debug(
                f"G2ANet update at t={ctx.t}: {len(feedbacks)} draws, mean feedback {np.mean(feedbacks):.4f}, "
                f"T_g={self.temperature:.3f}"
            )
        self._batch = []

    def real_output(self, ctx: RoundContext) -> torch.Tensor:
        return self.network(self.features, None, self.temperature)

    def demonstration_parameters(self) -> list[torch.Tensor]:
        return list(self.network.parameters())


def _group_by_noise(batch: list[_PendingDraw]) -> list[tuple[torch.Tensor | None, list[_PendingDraw]]]:
    groups: dict[int, tuple[torch.Tensor | None, list[_PendingDraw]]] = {}
    for p in batch:
        groups.setdefault(id(p.noise), (p.noise, []))[1].append(p)
    return list(groups.values())


class GumbelTopKReinforceSampler(Sampler):
    """Baseline: REINFORCE over free per-arm logits with gumbel top-K draws."""

    sampler_id = SamplerId.GTKR

    def __init__(self, hparams: Hyperparameters, rng: np.random.Generator, m_perms: int = 10, lr: float = 1e-2):
        super().__init__(hparams, rng)
        self.logits = torch.zeros(hparams.L, dtype=torch.float64, requires_grad=True)
        self.m_perms = m_perms
        self.lr = lr
        self._pending: dict[bytes, SubsetDraw] = {}
        self._batch: list[tuple[SubsetDraw, float]] = []

    def propose(self, ctx: RoundContext, quota: int) -> list[EliteSample]:
        if quota <= 0:
            return []
        log_w = self.logits.detach().numpy()
        draws = [sample_from_log_weights(log_w, self.hparams.K, self.m_perms, self.rng) for _ in range(quota)]
        self._pending = {d.action.key: d for d in draws}
        return self.make_elites(ctx, [d.action for d in draws])

    def record(self, ctx: RoundContext, samples: Sequence[EliteSample]) -> None:
        for sample in samples:
            draw = self._pending.pop(sample.action.key, None)
            if draw is not None:
                self._batch.append((draw, sample.surrogate_score - self.hparams.lam * sample.violation_rate))

    def train(self, ctx: RoundContext) -> None:
        if len(self._batch) >= 2:
            logprobs = torch.stack([subset_log_prob(self.logits, torch.from_numpy(d.perms)) for d, _ in self._batch])
            reinforce_update([self.logits], logprobs, [f for _, f in self._batch], self.lr)
        self._batch = []
