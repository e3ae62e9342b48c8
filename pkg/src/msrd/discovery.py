"""Discriminative region discovery: local maxima of gradient weight maps.

A sliding W x W maximum filter visits the map on a stride grid; a visited
pixel qualifies when it equals the window maximum (plateaus qualify too),
is strictly positive, and exceeds the configured threshold.  The channel
weight is the average of the qualifying values, 0 when there are none.

Windows are clipped at the borders rather than padded, so edge pixels
compare only against their existing neighbors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .grad_weights import GradientWeightMap


@dataclass(frozen=True)
class DiscoveryConfig:
    window: int = 3
    stride: int = 1
    min_value: float = 0.0

    def __post_init__(self):
        if self.window < 1 or self.window % 2 == 0:
            raise ValueError(f"window must be a positive odd integer, got {self.window}")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if self.min_value < 0:
            raise ValueError(f"min_value must be >= 0, got {self.min_value}")


@dataclass(frozen=True)
class LocalMaxima:
    """(i, j, value) triples in visit order plus their average."""

    positions: tuple[tuple[int, int, float], ...]
    weight: float


def _validate_map(map2d) -> np.ndarray:
    m = np.asarray(map2d)
    if m.ndim != 2:
        raise ValueError(f"expected a rank-2 map, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("map contains non-finite values")
    return m


def _mean_weight(values: list[float]) -> float:
    if not values:
        return 0.0
    return sum(values) / len(values)


def find_local_maxima(map2d, cfg: DiscoveryConfig) -> LocalMaxima:
    """Qualifying local maxima of one map under the sliding window rule."""
    m = _validate_map(map2d)
    radius = cfg.window // 2
    if radius == 0:
        window_max = m
    else:
        padded = np.pad(m.astype(np.float64, copy=False), radius, constant_values=-np.inf)
        windows = sliding_window_view(padded, (cfg.window, cfg.window))
        window_max = windows.max(axis=(2, 3))
    qualifies = (m == window_max) & (m > 0.0) & (m > cfg.min_value)
    visited = qualifies[:: cfg.stride, :: cfg.stride]
    rows, cols = np.nonzero(visited)
    positions = []
    for i, j in zip(rows * cfg.stride, cols * cfg.stride):
        positions.append((int(i), int(j), float(m[i, j])))
    return LocalMaxima(tuple(positions), _mean_weight([v for _, _, v in positions]))


def brute_force_maxima(map2d, cfg: DiscoveryConfig) -> LocalMaxima:
    """Same contract as find_local_maxima via the obvious per-position scan."""
    m = _validate_map(map2d)
    h, w = m.shape
    radius = cfg.window // 2
    positions = []
    for i in range(0, h, cfg.stride):
        for j in range(0, w, cfg.stride):
            value = m[i, j]
            if value <= 0.0 or value <= cfg.min_value:
                continue
            window = m[max(0, i - radius) : i + radius + 1, max(0, j - radius) : j + radius + 1]
            if value == window.max():
                positions.append((i, j, float(value)))
    return LocalMaxima(tuple(positions), _mean_weight([v for _, _, v in positions]))


def channel_weights(gwm, cfg: DiscoveryConfig) -> np.ndarray:
    """Per-channel weights: average of each channel's local maxima."""
    values = gwm.values if isinstance(gwm, GradientWeightMap) else np.asarray(gwm)
    if values.ndim != 3:
        raise ValueError(f"expected a rank-3 stack, got shape {values.shape}")
    return np.array([find_local_maxima(channel, cfg).weight for channel in values])
