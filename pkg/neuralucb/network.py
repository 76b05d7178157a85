"""
Bias-free fully connected ReLU network used by the master's reward estimator.

h(x; theta) = sqrt(m) * W_L sigma(W_{L-1} ... sigma(W_1 x))

Parameters live in one flat float64 tensor so that per-sample gradients,
the design matrix and the ridge term all work on the same p-vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
from torch.func import grad as func_grad
from torch.func import vmap

from core.errors import InvalidInputError

NORM_TOLERANCE = 1e-6


@dataclass
class NetworkParams:
    """Flat parameter vector plus the layer layout it encodes."""

    theta: torch.Tensor
    input_dim: int
    width: int
    depth: int

    @property
    def shapes(self) -> list[tuple[int, int]]:
        return layer_shapes(self.input_dim, self.width, self.depth)

    @property
    def num_params(self) -> int:
        return int(self.theta.numel())

    def weights(self) -> list[torch.Tensor]:
        return unflatten(self.theta, self.shapes)

    def clone(self) -> "NetworkParams":
        return NetworkParams(self.theta.detach().clone(), self.input_dim, self.width, self.depth)


def padded_dim(L: int) -> int:
    """Odd L gets one constant-zero feature so the two-block split is exact."""
    return L + (L % 2)


def layer_shapes(input_dim: int, width: int, depth: int) -> list[tuple[int, int]]:
    return [(width, input_dim)] + [(width, width)] * (depth - 2) + [(1, width)]


def unflatten(theta: torch.Tensor, shapes: list[tuple[int, int]]) -> list[torch.Tensor]:
    out, offset = [], 0
    for rows, cols in shapes:
        out.append(theta[offset : offset + rows * cols].reshape(rows, cols))
        offset += rows * cols
    return out


def _block_diag(block: np.ndarray) -> np.ndarray:
    r, c = block.shape
    full = np.zeros((2 * r, 2 * c))
    full[:r, :c] = block
    full[r:, c:] = block
    return full


def init_params(L: int, m: int, depth: int, seed: int | np.random.Generator) -> NetworkParams:
    """Block-diagonal hidden layers with N(0, 4/m) blocks; last layer (w, -w) with w ~ N(0, 2/m)."""
    if m < 2 or m % 2:
        raise InvalidInputError(f"Network width m must be even and >= 2, got {m}")
    if depth < 2:
        raise InvalidInputError(f"Network depth must be >= 2, got {depth}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    input_dim = padded_dim(L)
    half = m // 2
    layers = [_block_diag(rng.normal(0.0, math.sqrt(4.0 / m), size=(half, input_dim // 2)))]
    for _ in range(depth - 2):
        layers.append(_block_diag(rng.normal(0.0, math.sqrt(4.0 / m), size=(half, half))))
    w = rng.normal(0.0, math.sqrt(2.0 / m), size=half)
    layers.append(np.concatenate([w, -w])[None, :])
    theta = torch.from_numpy(np.concatenate([layer.ravel() for layer in layers])).to(torch.float64)
    return NetworkParams(theta=theta, input_dim=input_dim, width=m, depth=depth)


def network_output(theta: torch.Tensor, x: torch.Tensor, shapes: list[tuple[int, int]], width: int) -> torch.Tensor:
    """Raw forward pass; ``x`` may be one input or a batch of rows."""
    weights = unflatten(theta, shapes)
    h = x
    for W in weights[:-1]:
        h = torch.relu(h @ W.T)
    return math.sqrt(width) * (h @ weights[-1].T).squeeze(-1)


def pad_input(params: NetworkParams, x) -> torch.Tensor:
    t = torch.as_tensor(np.asarray(x, dtype=np.float64))
    extra = params.input_dim - t.shape[-1]
    if extra < 0:
        raise InvalidInputError(f"Input of length {t.shape[-1]} exceeds network input dim {params.input_dim}")
    if extra:
        t = torch.nn.functional.pad(t, (0, extra))
    return t


def check_normalized(x) -> None:
    norms = np.linalg.norm(np.atleast_2d(np.asarray(x, dtype=np.float64)), axis=-1)
    if norms.size == 0 or np.any(np.abs(norms - 1.0) > NORM_TOLERANCE):
        raise InvalidInputError(f"Network inputs must have unit L2 norm (got norms {norms.min():.6g}..{norms.max():.6g})")


def forward(params: NetworkParams, x) -> float:
    check_normalized(x)
    with torch.no_grad():
        return float(network_output(params.theta, pad_input(params, x), params.shapes, params.width))


def grad(params: NetworkParams, x) -> np.ndarray:
    check_normalized(x)
    return batch_grad(params, pad_input(params, np.atleast_2d(x)))[0].numpy()


def batch_forward(params: NetworkParams, X: torch.Tensor) -> torch.Tensor:
    """Forward on already padded rows, no norm check."""
    with torch.no_grad():
        return network_output(params.theta, X, params.shapes, params.width)


def batch_grad(params: NetworkParams, X: torch.Tensor) -> torch.Tensor:
    """Per-row gradients dh/dtheta on already padded rows, shape (n, p)."""
    shapes, width = params.shapes, params.width

    def single(theta: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
        return network_output(theta, x, shapes, width)

    return vmap(func_grad(single), in_dims=(None, 0))(params.theta.detach(), X)
