"""Gradient weight maps (alpha maps) and channel-weight baselines.

Two channel-weight schemes live here: the plain global-average-of-gradients
weights and the alpha-weighted rectified form they generalize to.  The alpha
map itself is the per-pixel weight stack that region discovery consumes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GradientWeightMap:
    """Per-channel stack (K x H x W) of nonnegative alpha weights.

    ``clamped`` counts pixels where the closed form had a nonpositive
    denominator with a nonzero gradient and alpha was forced to 0.
    """

    values: np.ndarray
    clamped: int = 0


def _as_stack(arr, name: str) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 3:
        raise ValueError(f"{name} must be rank 3 (K x H x W), got shape {arr.shape}")
    return arr


def _check_same_shape(activations: np.ndarray, gradients: np.ndarray) -> None:
    if activations.shape != gradients.shape:
        raise ValueError(
            f"activations shape {activations.shape} != gradients shape {gradients.shape}"
        )


def global_average_weights(gradients) -> np.ndarray:
    """Global-average channel weights: mean of each gradient channel."""
    g = _as_stack(gradients, "gradients")
    return g.mean(axis=(1, 2))


def rectified_gradients(gradients) -> np.ndarray:
    """Elementwise max(x, 0)."""
    return np.maximum(np.asarray(gradients, dtype=np.float64), 0.0)


def alpha_maps(activations, gradients) -> GradientWeightMap:
    """Per-pixel gradient weights for an exponential class score.

    alpha[k,i,j] = g[k,i,j]^2 / (2*g[k,i,j]^2 + sum_ab A[k,a,b]*g[k,a,b]^3),
    with alpha = 0 wherever the denominator is not strictly positive.
    """
    a = _as_stack(activations, "activations")
    g = _as_stack(gradients, "gradients")
    _check_same_shape(a, g)
    if np.any(a < 0):
        warnings.warn(
            "negative activations seen; alpha weights assume post-rectification maps",
            RuntimeWarning,
            stacklevel=2,
        )
    g2 = g * g
    channel_sum = np.sum(a * g2 * g, axis=(1, 2), keepdims=True)
    denom = 2.0 * g2 + channel_sum
    positive = denom > 0.0
    alpha = np.zeros_like(g2)
    np.divide(g2, denom, out=alpha, where=positive)
    clamped = int(np.count_nonzero(~positive & (g != 0.0)))
    return GradientWeightMap(values=alpha, clamped=clamped)


def rectified_alpha_weights(activations, gradients) -> np.ndarray:
    """Alpha-weighted rectified-gradient channel weights.

    weight[k] = sum_ij alpha[k,i,j] * max(g[k,i,j], 0).  This is the
    reference scheme that local-maxima discovery replaces.
    """
    g = _as_stack(gradients, "gradients")
    alpha = alpha_maps(activations, gradients).values
    return np.sum(alpha * np.maximum(g, 0.0), axis=(1, 2))
