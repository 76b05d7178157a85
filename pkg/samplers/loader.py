"""
Sampler loading for an experiment.

Builds the enabled slave samplers from the settings, each with its own
random stream.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Mapping

import numpy as np

from core.errors import ConfigurationError
from core.types import FeatureMatrix, Hyperparameters, SamplerId
from samplers.base import Sampler

if TYPE_CHECKING:
    from config.settings import ExperimentSettings

logger = logging.getLogger(__name__)


def build_sampler(
    sampler_id: SamplerId,
    hparams: Hyperparameters,
    rng: np.random.Generator,
    configs: Mapping[str, object],
    features: FeatureMatrix | None = None,
) -> Sampler:
    """Construct one sampler by id."""
    if sampler_id is SamplerId.SOLVER:
        from samplers.solver_sampler import SolverSampler

        return SolverSampler(hparams, rng, configs.get(sampler_id.value))
    if sampler_id is SamplerId.WOLPERTINGER:
        from samplers.wolpertinger_sampler import WolpertingerSampler

        return WolpertingerSampler(hparams, rng, configs.get(sampler_id.value))
    if sampler_id is SamplerId.G2ANET:
        from samplers.g2anet_sampler import G2ANetSampler

        return G2ANetSampler(hparams, rng, configs.get(sampler_id.value), features)
    if sampler_id is SamplerId.CEM:
        from samplers.cem_sampler import CemSampler

        return CemSampler(hparams, rng, configs.get(sampler_id.value))
    if sampler_id is SamplerId.RANDOM:
        from samplers.population_samplers import RandomSampler

        return RandomSampler(hparams, rng)
    if sampler_id is SamplerId.TLBO:
        from samplers.population_samplers import TlboSampler

        return TlboSampler(hparams, rng)
    if sampler_id is SamplerId.GTKR:
        from samplers.g2anet_sampler import G2ANetConfig, GumbelTopKReinforceSampler

        g2a = configs.get(SamplerId.G2ANET.value) or G2ANetConfig()
        return GumbelTopKReinforceSampler(hparams, rng, m_perms=g2a.m_perms, lr=g2a.lr)
    raise ConfigurationError(f"Unknown sampler: {sampler_id}")


def sampler_streams(seed_sequence: np.random.SeedSequence, ids: list[SamplerId]) -> dict[SamplerId, np.random.Generator]:
    """One independent stream per sampler, stable under reordering of ``ids``."""
    children = seed_sequence.spawn(len(SamplerId))
    by_id = dict(zip(SamplerId, children))
    return {sid: np.random.default_rng(by_id[sid]) for sid in ids}


def load_samplers(
    settings: "ExperimentSettings",
    hparams: Hyperparameters,
    rngs: Mapping[SamplerId, np.random.Generator],
    features: FeatureMatrix | None = None,
) -> list[Sampler]:
    """
    Load every enabled sampler.

    The random sampler is always present; it covers the exploration phase
    and fills quota deficits. TLBO, when enabled, is loaded last since it
    works on the pool of the others.
    """
    configs = settings.sampler_configs()
    ids = settings.enabled_samplers()
    ids = [s for s in ids if s is not SamplerId.TLBO] + [s for s in ids if s is SamplerId.TLBO]

    samplers = []
    for sid in ids:
        try:
            samplers.append(build_sampler(sid, hparams, rngs[sid], configs, features))
        except Exception as e:
            logger.error(f"❌ Failed to load sampler {sid.value}: {e}", exc_info=True)
            raise
    logger.info(f"✅ Loaded {len(samplers)} samplers: {', '.join(s.name for s in samplers)}")
    return samplers
