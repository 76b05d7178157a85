"""
Save and restore NeuralUCB state for experiment resume.

Format: a numpy ``.npz`` archive with a ``format_version`` entry. Arrays:
theta, theta0, Z, Z_inv, history_x, history_r; scalars: log_det, gamma_t,
lambda1, eta, J, diagonal, input_dim, width, depth, L. Discounted
estimators also store Z_tilde, gamma_ns and alpha_const.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import torch

from core.errors import InvalidInputError
from neuralucb.network import NetworkParams
from neuralucb.ucb import DiscountedNeuralUCB, NeuralUCB, UcbConfig, UcbState

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def save_checkpoint(estimator: NeuralUCB, path: str | Path) -> Path:
    path = Path(path)
    s = estimator.state
    p = s.params
    history_x = torch.stack(s.history_x).numpy() if s.history_x else np.zeros((0, p.input_dim))
    payload = {
        "format_version": np.array(FORMAT_VERSION),
        "theta": p.theta.numpy(),
        "theta0": s.theta0.numpy(),
        "Z": s.Z,
        "Z_inv": s.Z_inv,
        "history_x": history_x,
        "history_r": np.asarray(s.history_r, dtype=np.float64),
        "log_det": np.array(s.log_det),
        "gamma_t": np.array(s.gamma_t),
        "lambda1": np.array(s.lambda1),
        "eta": np.array(s.eta),
        "J": np.array(s.J),
        "diagonal": np.array(s.diagonal),
        "input_dim": np.array(p.input_dim),
        "width": np.array(p.width),
        "depth": np.array(p.depth),
        "L": np.array(estimator.L),
    }
    if isinstance(estimator, DiscountedNeuralUCB):
        payload["Z_tilde"] = estimator.discount.Z_tilde
        payload["gamma_ns"] = np.array(estimator.discount.gamma_ns)
        payload["alpha_const"] = np.array(estimator.discount.alpha_const)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        np.savez_compressed(fh, **payload)
    logger.info(f"💾 Saved NeuralUCB checkpoint (t={s.t}) to {path}")
    return path


def load_checkpoint(path: str | Path, config: UcbConfig | None = None) -> NeuralUCB:
    """Rebuild an estimator; ``config`` supplies the non-stored options (design mode, loss)."""
    path = Path(path)
    if not path.is_file():
        raise InvalidInputError(f"Checkpoint not found: {path}")
    with np.load(path, allow_pickle=False) as data:
        version = int(data["format_version"])
        if version != FORMAT_VERSION:
            raise InvalidInputError(f"{path}: unsupported checkpoint version {version}")
        width, depth, L = int(data["width"]), int(data["depth"]), int(data["L"])
        config = config or UcbConfig(width=width, depth=depth)
        if "Z_tilde" in data:
            estimator: NeuralUCB = DiscountedNeuralUCB(
                L, config, seed=0, gamma_ns=float(data["gamma_ns"]), alpha_const=float(data["alpha_const"])
            )
            estimator.discount.Z_tilde = data["Z_tilde"].copy()
        else:
            estimator = NeuralUCB(L, config, seed=0)
        params = NetworkParams(
            theta=torch.from_numpy(data["theta"].copy()),
            input_dim=int(data["input_dim"]),
            width=width,
            depth=depth,
        )
        estimator.state = UcbState(
            params=params,
            theta0=torch.from_numpy(data["theta0"].copy()),
            Z=data["Z"].copy(),
            Z_inv=data["Z_inv"].copy(),
            log_det=float(data["log_det"]),
            gamma_t=float(data["gamma_t"]),
            lambda1=float(data["lambda1"]),
            eta=float(data["eta"]),
            J=int(data["J"]),
            diagonal=bool(data["diagonal"]),
            history_x=[torch.from_numpy(row.copy()) for row in data["history_x"]],
            history_r=[float(r) for r in data["history_r"]],
        )
    logger.info(f"✅ Loaded NeuralUCB checkpoint (t={estimator.state.t}) from {path}")
    return estimator
