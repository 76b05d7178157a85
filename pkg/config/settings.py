"""
Experiment configuration.

Features:
- Flat ``key = value`` config files parsed with python-dotenv
- Validation through pydantic-settings (unknown keys rejected)
- Command-line overrides applied on top of file values
- Builders for Hyperparameters and the per-sampler config dataclasses

Environment variables are not consulted; the file and the flags are the only sources.
"""

from __future__ import annotations

import logging
from functools import lru_cache
from math import factorial
from pathlib import Path
from typing import Any, Literal, Mapping

from dotenv import dotenv_values
from pydantic import Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict

from core.errors import ConfigurationError
from core.types import Hyperparameters, SamplerId

logger = logging.getLogger(__name__)

# Keys in Hyperparameters, by their config-file names
HYPERPARAMETER_KEYS = (
    "L",
    "K",
    "lambda",
    "tau",
    "eps0",
    "rho",
    "f_in",
    "length_epoch",
    "L2",
    "n_es",
    "cluster_count",
    "seed",
)

ALL_SAMPLERS = "solver,wolpertinger,g2anet,cem,random,tlbo"


class ExperimentSettings(BaseSettings):
    """Every setting of one experiment. Field names are the config-file keys."""

    model_config = SettingsConfigDict(
        case_sensitive=True,
        extra="forbid",
        populate_by_name=True,
        validate_default=True,
    )

    # HYPERPARAMETERS (validated by core.types.Hyperparameters)
    L: int = 300
    K: int = 20
    lam: float = Field(5.0, alias="lambda")
    tau: float = 0.5
    eps0: float = 0.05
    rho: float = 0.1
    f_in: int = 20
    length_epoch: int = 20
    L2: int = 100
    n_es: int = 10
    cluster_count: int = 20
    seed: int = 0

    # EXPERIMENT
    T: int = Field(1000, ge=1)
    replicates: int = Field(1, ge=1)
    jobs: int = Field(1, ge=1)
    mode: str = "master-slave"
    master: Literal["stationary", "discounted"] = "stationary"
    samplers: str = ALL_SAMPLERS
    out_dir: str = "runs"
    exploration_rounds: int | None = Field(None, ge=0)
    parallel_slaves: bool = False
    participation: str = ""

    # ENVIRONMENT
    env: Literal["synthetic", "replay", "cascade"] = "synthetic"
    form: Literal["linear", "cubic", "quadratic", "mixed"] = "linear"
    d: int = Field(10, ge=1)
    noise_sigma: float = Field(0.1, ge=0.0)
    features_path: str | None = None
    log_path: str | None = None
    change_every: int | None = Field(None, ge=1)
    gamma_c: float = Field(0.9, ge=0.0, le=1.0)
    target_constraints: int | None = Field(None, ge=0)

    # NEURALUCB
    ucb_width: int = Field(32, ge=2)
    ucb_depth: int = Field(2, ge=2)
    ucb_steps: int = Field(100, ge=0)
    ucb_lr: float = Field(1e-3, gt=0.0)
    ucb_ridge: float = Field(1.0, gt=0.0)
    ucb_nu: float = Field(1.0, ge=0.0)
    ucb_delta: float = Field(0.1, gt=0.0, lt=1.0)
    ucb_floor: float = Field(0.0, ge=0.0)
    ucb_warm_start: bool = False
    ucb_design: Literal["auto", "full", "diagonal"] = "auto"
    ucb_refresh: int = Field(500, ge=1)
    ucb_loss: Literal["mean", "sum"] = "mean"
    gamma_ns: float = Field(0.99, gt=0.0, lt=1.0)
    alpha_const: float = Field(1.0, ge=0.0)

    # MASTER
    score_decay: float = Field(0.99, gt=0.0, lt=1.0)

    # CO-TRAINING
    cotraining: bool = True
    n_D: int = Field(20, ge=0)
    stuck_rounds: int | None = Field(None, ge=1)
    demo_lr: float = Field(1e-2, gt=0.0)

    # SOLVER SAMPLER
    solver_exact_limit: int = Field(40, ge=1)
    solver_restarts: int = Field(8, ge=1)

    # WOLPERTINGER SAMPLER
    wolp_kappa: float = Field(0.1, ge=0.0)
    wolp_swaps: int = Field(10, ge=0)
    wolp_alpha: float = Field(0.02, ge=0.0, le=1.0)
    wolp_lr_dual: float = Field(0.01, gt=0.0)
    wolp_hidden: int = Field(64, ge=1)
    wolp_actor_lr: float = Field(1e-3, ge=0.0)
    wolp_critic_lr: float = Field(1e-3, ge=0.0)
    wolp_tau_soft: float = Field(0.01, ge=0.0, le=1.0)
    wolp_capacity: int = Field(10_000, ge=1)
    wolp_batch: int = Field(60, ge=1)
    wolp_train_steps: int = Field(10, ge=0)
    wolp_discount: float = Field(0.0, ge=0.0, lt=1.0)
    wolp_imagined: int = Field(32, ge=0)
    prioritized_replay: bool = True

    # G2ANET SAMPLER
    g2a_hidden: int = Field(32, ge=1)
    g2a_temp: float = Field(1.0, gt=0.0)
    g2a_anneal: float = Field(0.995, gt=0.0, le=1.0)
    g2a_temp_floor: float = Field(0.1, gt=0.0)
    g2a_mperms: int | None = Field(None, ge=1)
    g2a_lr: float = Field(1e-2, ge=0.0)
    g2a_imagined: int = Field(16, ge=0)

    # CEM SAMPLER
    cem_N: int = Field(50, ge=1)
    cem_n: int = Field(10, ge=1)
    cem_beta_kl: float = Field(0.1, ge=0.0)
    cem_beta_mix: float = Field(0.3, ge=0.0, le=1.0)
    cem_eps_mu: float = Field(0.01, gt=0.0, lt=0.5)
    cem_archive: int = Field(20, ge=0)
    cem_steps: int = Field(5, ge=0)
    cem_lr: float = Field(0.05, ge=0.0)
    cem_prob: Literal["factorized", "topk"] = "factorized"

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        return (init_settings,)

    @model_validator(mode="after")
    def _validate_combinations(self) -> "ExperimentSettings":
        try:
            self.hyperparameters()
        except ValidationError as e:
            raise ValueError(_format_validation_error(e)) from None
        self.enabled_samplers()
        self.participation_periods()
        self.standalone_sampler()
        if self.env == "replay" and not self.log_path:
            raise ValueError("env = replay requires log_path")
        return self

    # ------------------------------------------------------------------
    # Derived views
    # ------------------------------------------------------------------

    def hyperparameters(self) -> Hyperparameters:
        return Hyperparameters(
            L=self.L,
            K=self.K,
            lam=self.lam,
            tau=self.tau,
            eps0=self.eps0,
            rho=self.rho,
            f_in=self.f_in,
            length_epoch=self.length_epoch,
            L2=self.L2,
            n_es=self.n_es,
            cluster_count=self.cluster_count,
            seed=self.seed,
        )

    def enabled_samplers(self) -> list[SamplerId]:
        names = [s for s in self.samplers.split(",") if s.strip()]
        ids = [SamplerId.parse(s) for s in names]
        if SamplerId.GTKR in ids:
            raise ValueError("gtkr is a standalone baseline; use mode = standalone:gtkr")
        if SamplerId.RANDOM not in ids:
            ids.append(SamplerId.RANDOM)
        # stable order following the enum
        return [s for s in SamplerId if s in ids]

    def participation_periods(self) -> dict[SamplerId, int]:
        periods = {s: 1 for s in SamplerId}
        for item in filter(None, (p.strip() for p in self.participation.split(","))):
            name, _, value = item.partition(":")
            if not value.strip().isdigit() or int(value) < 1:
                raise ValueError(f"participation entry '{item}' must look like 'sampler:period' with period >= 1")
            periods[SamplerId.parse(name)] = int(value)
        return periods

    def standalone_sampler(self) -> str | None:
        """Name of the standalone baseline, or None in master-slave mode."""
        if self.mode == "master-slave":
            return None
        prefix, _, name = self.mode.partition(":")
        if prefix != "standalone" or not name:
            raise ValueError(f"mode must be 'master-slave' or 'standalone:<sampler>', got '{self.mode}'")
        if name in (SamplerId.TLBO.value, SamplerId.SOLVER.value):
            raise ConfigurationError(f"The {name} sampler cannot run standalone; it needs the master's pool or surrogate")
        if name not in STANDALONE_MODES:
            raise ValueError(f"Unknown standalone sampler '{name}'. Valid: {', '.join(STANDALONE_MODES)}")
        return name

    @property
    def n_exploration(self) -> int:
        return 2 * self.L if self.exploration_rounds is None else self.exploration_rounds

    @property
    def w_stuck(self) -> int:
        return 3 * self.f_in if self.stuck_rounds is None else self.stuck_rounds

    @property
    def m_perms(self) -> int:
        return min(factorial(self.K), 10) if self.g2a_mperms is None else self.g2a_mperms

    def ucb_config(self):
        from neuralucb.ucb import UcbConfig

        return UcbConfig(
            width=self.ucb_width,
            depth=self.ucb_depth,
            steps=self.ucb_steps,
            lr=self.ucb_lr,
            ridge=self.ucb_ridge,
            nu=self.ucb_nu,
            delta=self.ucb_delta,
            floor=self.ucb_floor,
            warm_start=self.ucb_warm_start,
            design=self.ucb_design,
            refresh_every=self.ucb_refresh,
            loss=self.ucb_loss,
        )

    def sampler_configs(self) -> dict[str, Any]:
        """Per-sampler config dataclasses keyed by sampler name."""
        from samplers.cem_sampler import CemConfig
        from samplers.g2anet_sampler import G2ANetConfig
        from samplers.solver_sampler import SolverConfig
        from samplers.wolpertinger_sampler import WolpertingerConfig

        return {
            SamplerId.SOLVER.value: SolverConfig(exact_limit=self.solver_exact_limit, restarts=self.solver_restarts),
            SamplerId.WOLPERTINGER.value: WolpertingerConfig(
                kappa=self.wolp_kappa,
                n_swaps=self.wolp_swaps,
                alpha_c=self.wolp_alpha,
                lr_dual=self.wolp_lr_dual,
                hidden=self.wolp_hidden,
                actor_lr=self.wolp_actor_lr,
                critic_lr=self.wolp_critic_lr,
                tau_soft=self.wolp_tau_soft,
                capacity=self.wolp_capacity,
                batch_size=self.wolp_batch,
                train_steps=self.wolp_train_steps,
                discount=self.wolp_discount,
                imagined=self.wolp_imagined,
                prioritized=self.prioritized_replay,
            ),
            SamplerId.G2ANET.value: G2ANetConfig(
                hidden=self.g2a_hidden,
                temperature=self.g2a_temp,
                anneal=self.g2a_anneal,
                temperature_floor=self.g2a_temp_floor,
                m_perms=self.m_perms,
                lr=self.g2a_lr,
                imagined=self.g2a_imagined,
            ),
            SamplerId.CEM.value: CemConfig(
                N=self.cem_N,
                n=self.cem_n,
                beta_kl=self.cem_beta_kl,
                beta_mix=self.cem_beta_mix,
                eps_mu=self.cem_eps_mu,
                archive_size=self.cem_archive,
                ascent_steps=self.cem_steps,
                ascent_lr=self.cem_lr,
                prob_form=self.cem_prob,
                m_perms=self.m_perms,
            ),
        }

    def summary(self) -> dict[str, Any]:
        """Loggable view of the settings that differ from the defaults."""
        data = self.model_dump(by_alias=True)
        defaults = default_settings().model_dump(by_alias=True)
        return {k: v for k, v in data.items() if v != defaults.get(k)}


STANDALONE_MODES = ("random", "wolpertinger", "g2anet", "gtkr", "cem")


@lru_cache()
def default_settings() -> ExperimentSettings:
    """All-defaults settings, cached."""
    return ExperimentSettings()


# ============================================================================
# LOADING
# ============================================================================


def _format_validation_error(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        field = ".".join(str(p) for p in item.get("loc", ())) or "settings"
        parts.append(f"{field}: {item.get('msg')}")
    return "; ".join(parts)


def build_settings(values: Mapping[str, Any]) -> ExperimentSettings:
    """Validate a flat mapping of config keys."""
    try:
        return ExperimentSettings(**dict(values))
    except ValidationError as e:
        raise ConfigurationError(f"Invalid configuration: {_format_validation_error(e)}") from e


def read_config_file(path: str | Path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Config file not found: {path}")
    raw = dotenv_values(path)
    missing = [k for k, v in raw.items() if v is None]
    if missing:
        raise ConfigurationError(f"Config keys without a value in {path}: {', '.join(missing)}")
    return {k: v for k, v in raw.items()}


def load_settings(path: str | Path | None = None, overrides: Mapping[str, Any] | None = None) -> ExperimentSettings:
    """Read the config file (if any), apply overrides and validate."""
    values: dict[str, Any] = read_config_file(path) if path is not None else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    settings = build_settings(values)
    logger.debug(f"Loaded settings: {settings.summary()}")
    return settings
