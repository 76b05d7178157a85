"""
Master model and the master-slave round loop.

Features:
- Surrogate U(A) from NeuralUCB on the unit-normalized action
- Softmax quota assignment over per-sampler score history
- Score = U - lambda * violation rate, argmax selection over the elite pool
- Random-only exploration phase, deficit filling by the random sampler
- Slave training every f_in rounds, with co-training for stuck samplers
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Mapping, Sequence

import numpy as np
from scipy.special import softmax

from core.errors import InternalError
from core.scoring import composite_score
from core.types import ActionVector, ConstraintSet, EliteSample, FeatureMatrix, Hyperparameters, SamplerId
from cotraining.buffers import RecommendedEntry, SharedBuffers
from cotraining.demonstration import CoTrainer, DemonstrationStore
from environments.base import BanditEnvironment
from environments.cascade import CascadeEnvironment
from master.state import MasterState, RoundRecord, get_state_summary
from neuralucb.ucb import NeuralUCB
from samplers.base import Sampler
from samplers.context import RoundContext
from samplers.population_samplers import RandomSampler
from samplers.solver_sampler import extract_first_order

logger = logging.getLogger(__name__)


class MasterModel:
    """Surrogate oracle backed by a NeuralUCB estimator."""

    def __init__(self, estimator: NeuralUCB):
        self.estimator = estimator

    @property
    def L(self) -> int:
        return self.estimator.L

    def __call__(self, actions: Sequence[ActionVector]) -> np.ndarray:
        if not actions:
            return np.zeros(0)
        X = np.stack([a.normalized() for a in actions])
        return self.estimator.ucb_batch(X)[2]

    def raw(self, X: np.ndarray) -> np.ndarray:
        return self.estimator.raw_ucb(X)

    def surrogate(self, action: ActionVector) -> float:
        return float(self([action])[0])

    def update(self, action: ActionVector, reward: float) -> None:
        self.estimator.update(action.normalized(), reward)

    def summary(self) -> dict:
        s = self.estimator.state
        return {
            "t": s.t,
            "gamma_t": round(s.gamma_t, 4),
            "params": self.estimator.num_params,
            "design": "diagonal" if s.diagonal else "full",
            "estimator": type(self.estimator).__name__,
        }


# ============================================================================
# QUOTAS AND SELECTION
# ============================================================================


def assign_quotas(
    score_history: Mapping[SamplerId, float], participants: Sequence[SamplerId], n_es: int
) -> dict[SamplerId, int]:
    """Softmax shares of n_es with largest-remainder rounding (ties to the earlier sampler)."""
    if not participants:
        return {}
    shares = softmax(np.array([score_history.get(s, 0.0) for s in participants], dtype=np.float64)) * n_es
    base = np.floor(shares).astype(np.int64)
    remainder = n_es - int(base.sum())
    order = np.argsort(-(shares - base), kind="stable")
    base[order[:remainder]] += 1
    return {s: int(q) for s, q in zip(participants, base)}


def evaluate_and_select(
    oracle, pool: Sequence[EliteSample], lam: float
) -> tuple[int, np.ndarray]:
    """Index of the best Score in the pool (lowest index on ties) and all scores."""
    if not pool:
        raise InternalError("Empty elite pool")
    U = np.asarray(oracle([s.action for s in pool]), dtype=np.float64)
    c = np.array([s.violation_rate for s in pool])
    scores = composite_score(U, c, lam)
    return int(np.argmax(scores)), scores


# ============================================================================
# ROUND LOOP
# ============================================================================


class MasterSlaveLoop:
    def __init__(
        self,
        hparams: Hyperparameters,
        env: BanditEnvironment,
        constraints: ConstraintSet,
        model: MasterModel,
        samplers: Sequence[Sampler],
        env_rng: np.random.Generator,
        *,
        features: FeatureMatrix | None = None,
        exploration_rounds: int | None = None,
        participation: Mapping[SamplerId, int] | None = None,
        score_decay: float = 0.99,
        cotrainer: CoTrainer | None = None,
        parallel_slaves: bool = False,
    ):
        self.hparams = hparams
        self.env = env
        self.constraints = constraints
        self.model = model
        self.samplers = list(samplers)
        self.env_rng = env_rng
        self.features = features
        self.participation = dict(participation or {})
        self.score_decay = score_decay
        self.cotrainer = cotrainer or CoTrainer(3 * hparams.f_in, 20)
        self.parallel_slaves = parallel_slaves

        self.random = next((s for s in self.samplers if isinstance(s, RandomSampler)), None)
        if self.random is None:
            raise InternalError("The random sampler must always be loaded")
        self.tlbo = next((s for s in self.samplers if s.sampler_id is SamplerId.TLBO), None)
        self.buffers = SharedBuffers(hparams.length_epoch)
        self.store = DemonstrationStore(hparams.L2)
        horizon = 2 * hparams.L if exploration_rounds is None else exploration_rounds
        self.state = MasterState(L=hparams.L, exploration_horizon=horizon)
        self._executor = ThreadPoolExecutor(max_workers=len(self.samplers)) if parallel_slaves else None

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    # ------------------------------------------------------------------

    def _context(self, t: int, pool: Sequence[EliteSample] = ()) -> RoundContext:
        return RoundContext(
            t=t,
            hparams=self.hparams,
            constraints=self.constraints,
            oracle=self.model,
            buffers=self.buffers.snapshot(),
            pool=tuple(pool),
            features=self.features,
            recommend_counts=self.state.recommend_counts.copy(),
        )

    def _quotas(self, t: int) -> dict[SamplerId, int]:
        if self.state.exploring:
            return {SamplerId.RANDOM: self.hparams.n_es}
        participants = [
            s.sampler_id for s in self.samplers if t % self.participation.get(s.sampler_id, 1) == 0
        ] or [SamplerId.RANDOM]
        return assign_quotas(self.state.score_history, participants, self.hparams.n_es)

    def _timed_propose(self, sampler: Sampler, ctx: RoundContext, quota: int) -> tuple[list[EliteSample], float]:
        start = time.perf_counter()
        samples = sampler.propose(ctx, quota)
        return samples, time.perf_counter() - start

    def _fill_deficit(self, ctx: RoundContext, count: int) -> list[EliteSample]:
        if count <= 0:
            return []
        return self.random.make_elites(ctx, self.random.draw(count))

    def _collect(self, ctx: RoundContext, quotas: dict[SamplerId, int]) -> tuple[list[EliteSample], dict[SamplerId, float]]:
        first = [s for s in self.samplers if s is not self.tlbo and quotas.get(s.sampler_id, 0) > 0]
        if self._executor is not None:
            futures = [self._executor.submit(self._timed_propose, s, ctx, quotas[s.sampler_id]) for s in first]
            results = [f.result() for f in futures]
        else:
            results = [self._timed_propose(s, ctx, quotas[s.sampler_id]) for s in first]

        timings: dict[SamplerId, float] = {}
        pool: list[EliteSample] = []
        for sampler, (samples, elapsed) in zip(first, results):
            pool.extend(samples[: quotas[sampler.sampler_id]])
            timings[sampler.sampler_id] = elapsed
        pool.extend(self._fill_deficit(ctx, sum(quotas[s.sampler_id] for s in first) - len(pool)))

        tlbo_quota = quotas.get(SamplerId.TLBO, 0)
        if self.tlbo is not None and tlbo_quota > 0:
            if pool:
                samples, elapsed = self._timed_propose(self.tlbo, replace(ctx, pool=tuple(pool)), tlbo_quota)
                timings[SamplerId.TLBO] = elapsed
                samples = samples[:tlbo_quota]
            else:
                samples = []
            pool.extend(samples)
            pool.extend(self._fill_deficit(ctx, tlbo_quota - len(samples)))
        if not pool:
            pool = self._fill_deficit(ctx, 1)
        return pool, timings

    def _refresh_cascade_order(self, t: int) -> None:
        if isinstance(self.env, CascadeEnvironment) and (t == 1 or (t - 1) % self.hparams.f_in == 0):
            self.env.set_item_scores(extract_first_order(self.model.raw, self.hparams.L).b)

    def _update_history(self, pool: Sequence[EliteSample], t: int) -> None:
        by_sampler: dict[SamplerId, list[float]] = {}
        for s in pool:
            by_sampler.setdefault(s.sampler_id, []).append(s.surrogate_score)
        for sid, values in by_sampler.items():
            mean = float(np.mean(values))
            old = self.state.score_history.get(sid)
            self.state.score_history[sid] = mean if old is None else self.score_decay * old + (1 - self.score_decay) * mean
            self.cotrainer.note_submission(sid.value, t, max(values))

    def run_round(self) -> RoundRecord:
        self.state.t += 1
        t = self.state.t
        self._refresh_cascade_order(t)
        ctx = self._context(t)
        quotas = self._quotas(t)
        self.state.quotas = quotas
        pool, timings = self._collect(ctx, quotas)

        index, scores = evaluate_and_select(self.model, pool, self.hparams.lam)
        chosen = pool[index]
        reward = float(self.env.feedback(t, chosen.action, self.env_rng))
        self.model.update(chosen.action, reward)

        for s in pool:
            self.buffers.push_elite(s)
        self.buffers.push_recommended(RecommendedEntry(t, chosen.action, reward, chosen.violation_rate))
        self.store.push(t, chosen.action, reward - self.hparams.lam * chosen.violation_rate)

        for sampler in self.samplers:
            own = [s for s in pool if s.sampler_id is sampler.sampler_id]
            if own:
                sampler.record(ctx, own)
            sampler.observe_round(ctx, pool)
        self._update_history(pool, t)
        self.state.recommend_counts += chosen.action.bits
        self.state.chosen_counts[chosen.sampler_id] = self.state.chosen_counts.get(chosen.sampler_id, 0) + 1

        if t % self.hparams.f_in == 0:
            train_ctx = self._context(t)
            for sampler in self.samplers:
                start = time.perf_counter()
                sampler.train(train_ctx)
                timings[sampler.sampler_id] = timings.get(sampler.sampler_id, 0.0) + time.perf_counter() - start
            applied = self.cotrainer.step(train_ctx, self.samplers, self.store)
            self.state.demonstrations += len(applied)

        return RoundRecord(
            t=t,
            action=chosen.action,
            reward=reward,
            violation=chosen.violation_rate,
            sampler_id=chosen.sampler_id,
            score=float(scores[index]),
            quotas=quotas,
            timings=timings,
        )

    def summary(self) -> dict:
        return {**get_state_summary(self.state), "surrogate": self.model.summary()}
