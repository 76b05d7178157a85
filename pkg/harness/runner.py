"""
Experiment runner.

Features:
- Builds environment, item features, diversity constraints and master per replicate
- Master-slave mode and standalone baselines (one sampler on real feedback)
- Independent seed streams per replicate, environment, master and sampler
- Replicates in parallel processes; BLAS and torch pinned to one thread each
- CSV written row by row; replay runs stop cleanly at the end of the log
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import torch
from threadpoolctl import threadpool_limits

from config.settings import ExperimentSettings
from core.diversity import build_constraints, tau_for_count
from core.errors import ConfigurationError, EndOfLogError, InfeasibleError
from core.types import ConstraintSet, FeatureMatrix, Hyperparameters, SamplerId
from cotraining.demonstration import CoTrainer
from environments.base import BanditEnvironment
from environments.cascade import CascadeEnvironment, generate_cascade_spec
from environments.ingest import ingest_features, ingest_log
from environments.replay import ReplayEnvironment
from environments.synthetic import (
    SyntheticEnvironment,
    SyntheticFeedbackSpec,
    generate_synthetic_spec,
    spec_from_click_log,
)
from harness.export import SeriesCsvWriter, export_arr, export_csv
from harness.ground_truth import ground_truth
from harness.metrics import MetricsSeries
from master.master import MasterModel, MasterSlaveLoop
from master.state import RoundRecord
from neuralucb.ucb import DiscountedNeuralUCB, NeuralUCB
from samplers.base import Sampler
from samplers.context import RoundContext
from samplers.loader import build_sampler, load_samplers, sampler_streams

logger = logging.getLogger(__name__)

SERIES_FILE = "series.csv"
ARR_FILE = "arr.csv"


@dataclass
class ExperimentSetup:
    env: BanditEnvironment
    features: FeatureMatrix
    constraints: ConstraintSet
    spec: SyntheticFeedbackSpec | None = None


@dataclass
class ReplicateResult:
    index: int
    series: MetricsSeries
    series_path: Path
    arr_path: Path
    ground_truth: float | None = None
    stopped_early: bool = False


# ============================================================================
# SETUP
# ============================================================================


def replicate_seed(seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, index])


def build_features(settings: ExperimentSettings, rng: np.random.Generator) -> FeatureMatrix:
    if settings.features_path:
        features = ingest_features(settings.features_path)
        if features.L != settings.L:
            raise ConfigurationError(f"features_path has {features.L} items but L = {settings.L}")
        return features
    return FeatureMatrix(rng.uniform(0.0, 1.0, size=(settings.L, settings.d)))


def build_constraint_set(settings: ExperimentSettings, features: FeatureMatrix) -> ConstraintSet:
    tau = settings.tau
    if settings.target_constraints is not None:
        tau = tau_for_count(features, settings.target_constraints)
        logger.info(f"Calibrated tau={tau:.6f} for {settings.target_constraints} constraints")
    return build_constraints(features, tau)


def build_environment(
    settings: ExperimentSettings, rng: np.random.Generator, redraw_rng: np.random.Generator
) -> ExperimentSetup:
    features = build_features(settings, rng)
    constraints = build_constraint_set(settings, features)
    if settings.env == "replay":
        log = ingest_log(settings.log_path, settings.K, settings.L)
        return ExperimentSetup(ReplayEnvironment(log), features, constraints)
    if settings.env == "cascade":
        spec = generate_cascade_spec(settings.L, rng, settings.gamma_c)
        return ExperimentSetup(CascadeEnvironment(spec), features, constraints)
    if settings.log_path:
        spec = spec_from_click_log(ingest_log(settings.log_path, settings.K, settings.L), settings.form, rng, settings.noise_sigma)
    else:
        spec = generate_synthetic_spec(settings.L, settings.form, rng, settings.noise_sigma)
    env = SyntheticEnvironment(spec, settings.change_every, rng=redraw_rng if settings.change_every else None)
    return ExperimentSetup(env, features, constraints, spec)


def build_master_model(settings: ExperimentSettings, rng: np.random.Generator) -> MasterModel:
    config = settings.ucb_config()
    if settings.master == "discounted":
        estimator = DiscountedNeuralUCB(settings.L, config, rng, gamma_ns=settings.gamma_ns, alpha_const=settings.alpha_const)
    else:
        estimator = NeuralUCB(settings.L, config, rng)
    return MasterModel(estimator)


def _horizon(settings: ExperimentSettings, env: BanditEnvironment) -> int:
    return settings.T if env.horizon is None else min(settings.T, env.horizon)


# ============================================================================
# LOOPS
# ============================================================================


def _run_loop(step, T: int, writer: SeriesCsvWriter, series: MetricsSeries, label: str) -> bool:
    """Run ``step(t)`` for t = 1..T; returns True when the environment ran out first."""
    report_every = max(1, T // 10)
    for t in range(1, T + 1):
        try:
            record: RoundRecord = step(t)
        except EndOfLogError as e:
            logger.warning(f"⚠️ {label}: stopping at round {t}: {e}")
            return True
        series.append(record)
        writer.write(record.t, record.reward, record.violation, record.sampler_id, record.score)
        if t % report_every == 0:
            window = series.rewards[-report_every:]
            logger.info(f"🔄 {label}: round {t}/{T}, recent mean reward {np.mean(window):.4f}")
    return False


def _standalone_step(
    sampler: Sampler,
    hparams: Hyperparameters,
    setup: ExperimentSetup,
    env_rng: np.random.Generator,
    counts: np.ndarray,
):
    def step(t: int) -> RoundRecord:
        ctx = RoundContext(
            t=t,
            hparams=hparams,
            constraints=setup.constraints,
            features=setup.features,
            recommend_counts=counts.copy(),
        )
        proposals = sampler.propose(ctx, 1)
        if not proposals:
            raise ConfigurationError(f"Standalone sampler {sampler.name} produced no action at round {t}")
        played = proposals[0]
        reward = float(setup.env.feedback(t, played.action, env_rng))
        scored = replace(played, surrogate_score=reward)
        sampler.record(ctx, [scored])
        sampler.observe_round(ctx, [scored])
        counts[:] += played.action.bits
        if t % hparams.f_in == 0:
            sampler.train(ctx)
        return RoundRecord(
            t=t,
            action=played.action,
            reward=reward,
            violation=played.violation_rate,
            sampler_id=sampler.sampler_id,
            score=reward - hparams.lam * played.violation_rate,
        )

    return step


def run_replicate(settings: ExperimentSettings, index: int) -> ReplicateResult:
    """One isolated replicate; writes ``series.csv`` and ``arr.csv`` under its own directory."""
    with threadpool_limits(limits=1):
        torch.set_num_threads(1)
        return _run_replicate(settings, index)


def _run_replicate(settings: ExperimentSettings, index: int) -> ReplicateResult:
    hparams = settings.hyperparameters()
    setup_ss, env_ss, redraw_ss, master_ss, sampler_ss = replicate_seed(settings.seed, index).spawn(5)
    setup = build_environment(settings, np.random.default_rng(setup_ss), np.random.default_rng(redraw_ss))
    env_rng = np.random.default_rng(env_ss)
    out = Path(settings.out_dir) / f"replicate_{index:03d}"
    label = f"replicate {index}"
    T = _horizon(settings, setup.env)

    standalone = settings.standalone_sampler()
    if standalone is not None:
        sid = SamplerId.parse(standalone)
        rng = sampler_streams(sampler_ss, [sid])[sid]
        sampler = build_sampler(sid, hparams, rng, settings.sampler_configs(), setup.features)
        series = MetricsSeries(exploration_horizon=0)
        step = _standalone_step(sampler, hparams, setup, env_rng, np.zeros(hparams.L))
        logger.info(f"🚀 {label}: standalone {sid.value}, T={T}, M={setup.constraints.M}")
        with SeriesCsvWriter(out / SERIES_FILE) as writer:
            stopped = _run_loop(step, T, writer, series, label)
        samplers_for_arr = [sid]
    else:
        ids = settings.enabled_samplers()
        samplers = load_samplers(settings, hparams, sampler_streams(sampler_ss, ids), setup.features)
        cotrainer = CoTrainer(settings.w_stuck, settings.n_D, settings.demo_lr, enabled=settings.cotraining)
        loop = MasterSlaveLoop(
            hparams,
            setup.env,
            setup.constraints,
            build_master_model(settings, np.random.default_rng(master_ss)),
            samplers,
            env_rng,
            features=setup.features,
            exploration_rounds=settings.n_exploration,
            participation=settings.participation_periods(),
            score_decay=settings.score_decay,
            cotrainer=cotrainer,
            parallel_slaves=settings.parallel_slaves,
        )
        series = MetricsSeries(exploration_horizon=loop.state.exploration_horizon)
        logger.info(f"🚀 {label}: master-slave with {len(samplers)} samplers, T={T}, M={setup.constraints.M}")
        try:
            with SeriesCsvWriter(out / SERIES_FILE) as writer:
                stopped = _run_loop(lambda t: loop.run_round(), T, writer, series, label)
        finally:
            loop.close()
        logger.info(f"✅ {label} finished: {loop.summary()}")
        samplers_for_arr = ids

    export_csv(series, out / SERIES_FILE)
    arr_path = export_arr(series, out / ARR_FILE, samplers_for_arr)
    optimum = _ground_truth(settings, setup, hparams)
    logger.info(f"💾 {label}: {len(series)} rounds written to {out}")
    return ReplicateResult(index, series, out / SERIES_FILE, arr_path, optimum, stopped)


def _ground_truth(settings: ExperimentSettings, setup: ExperimentSetup, hparams: Hyperparameters) -> float | None:
    if setup.spec is None or settings.change_every is not None:
        return None
    try:
        _, value, _ = ground_truth(
            setup.spec,
            setup.constraints,
            hparams.K,
            exact_limit=settings.solver_exact_limit,
            rng=np.random.default_rng(settings.seed),
            restarts=settings.solver_restarts,
        )
    except InfeasibleError as e:
        logger.warning(f"⚠️ No ground truth: {e}")
        return None
    logger.info(f"Ground-truth value {value:.4f}")
    return value


def run_experiment(settings: ExperimentSettings) -> list[ReplicateResult]:
    """All replicates, in parallel processes when ``jobs`` > 1."""
    workers = min(settings.replicates, settings.jobs)
    indices = range(settings.replicates)
    if workers <= 1:
        return [run_replicate(settings, i) for i in indices]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_replicate, settings, i) for i in indices]
        return [f.result() for f in futures]
