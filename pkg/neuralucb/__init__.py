"""
Neural contextual UCB estimator used by the master model.
"""

from .network import NetworkParams, init_params, forward, grad, padded_dim
from .ucb import (
    UcbConfig,
    UcbState,
    DiscountSpec,
    NeuralUCB,
    DiscountedNeuralUCB,
    discounted_design_step,
)
from .checkpoint import save_checkpoint, load_checkpoint

__all__ = [
    "NetworkParams",
    "init_params",
    "forward",
    "grad",
    "padded_dim",
    "UcbConfig",
    "UcbState",
    "DiscountSpec",
    "NeuralUCB",
    "DiscountedNeuralUCB",
    "discounted_design_step",
    "save_checkpoint",
    "load_checkpoint",
]
