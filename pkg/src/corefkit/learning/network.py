"""Two-hidden-layer feedforward scorer with hand-written backprop.

Forward: z1 = X W1 + b1; a1 = max(0, z1); z2 = a1 W2 + b2; a2 = max(0, z2);
out = a2 . w3 + b3 (scalar per row). Backward accumulates into the
ParameterStore gradient buffers and returns the input gradient.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from corefkit.learning.params import ParameterStore


class FfnnCache(NamedTuple):
    x: np.ndarray
    z1: np.ndarray
    a1: np.ndarray
    z2: np.ndarray
    a2: np.ndarray
    squeeze: bool


def ffnn_forward(
    store: ParameterStore, prefix: str, x: np.ndarray
) -> tuple[np.ndarray, FfnnCache]:
    """Score rows of x; x may be a single vector or an (n, in_dim) batch."""
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    x2 = np.atleast_2d(x)
    z1 = x2 @ store[f"{prefix}.W1"] + store[f"{prefix}.b1"]
    a1 = np.maximum(z1, 0.0)
    z2 = a1 @ store[f"{prefix}.W2"] + store[f"{prefix}.b2"]
    a2 = np.maximum(z2, 0.0)
    out = a2 @ store[f"{prefix}.w3"] + store[f"{prefix}.b3"]
    return (out[0] if squeeze else out), FfnnCache(x2, z1, a1, z2, a2, squeeze)


def ffnn_backward(
    store: ParameterStore, prefix: str, cache: FfnnCache, dout: np.ndarray
) -> np.ndarray:
    """Accumulate parameter gradients for dout (shape (n,) or scalar) and
    return the gradient with respect to the input."""
    dout = np.atleast_1d(np.asarray(dout, dtype=float))
    da2 = dout[:, None] * store[f"{prefix}.w3"][None, :]
    store.grads[f"{prefix}.w3"] += cache.a2.T @ dout
    store.grads[f"{prefix}.b3"] += dout.sum()
    dz2 = da2 * (cache.z2 > 0)
    store.grads[f"{prefix}.W2"] += cache.a1.T @ dz2
    store.grads[f"{prefix}.b2"] += dz2.sum(axis=0)
    da1 = dz2 @ store[f"{prefix}.W2"].T
    dz1 = da1 * (cache.z1 > 0)
    store.grads[f"{prefix}.W1"] += cache.x.T @ dz1
    store.grads[f"{prefix}.b1"] += dz1.sum(axis=0)
    dx = dz1 @ store[f"{prefix}.W1"].T
    return dx[0] if cache.squeeze else dx


def ffnn_infer(store: ParameterStore, prefix: str, x: np.ndarray) -> np.ndarray:
    """Forward pass without retaining activations."""
    x2 = np.atleast_2d(np.asarray(x, dtype=float))
    a1 = np.maximum(x2 @ store[f"{prefix}.W1"] + store[f"{prefix}.b1"], 0.0)
    a2 = np.maximum(a1 @ store[f"{prefix}.W2"] + store[f"{prefix}.b2"], 0.0)
    out = a2 @ store[f"{prefix}.w3"] + store[f"{prefix}.b3"]
    return out[0] if np.asarray(x).ndim == 1 else out
