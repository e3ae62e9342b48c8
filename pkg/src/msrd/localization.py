"""Localization map assembly, resampling, multi-scale fusion, normalization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LocalizationMap:
    """Single-channel nonnegative map with its originating scale tag."""

    map: np.ndarray
    scale_tag: str = ""
    normalized: bool = False

    @property
    def shape(self) -> tuple[int, ...]:
        return self.map.shape


def layer_locmap(activations, weights, scale_tag: str = "") -> LocalizationMap:
    """Rectified weighted sum of activation channels: max(0, sum_k w_k * A_k)."""
    acts = np.asarray(activations, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if acts.ndim != 3:
        raise ValueError(f"activations must be rank 3, got shape {acts.shape}")
    if w.shape != (acts.shape[0],):
        raise ValueError(f"expected {acts.shape[0]} weights, got {w.shape}")
    combined = np.maximum(np.tensordot(w, acts, axes=(0, 0)), 0.0)
    return LocalizationMap(map=combined, scale_tag=scale_tag, normalized=False)


def _axis_coords(src_size: int, dst_size: int) -> np.ndarray:
    # half-pixel centers: src = (dst + 0.5) * (src/dst) - 0.5, clamped
    coords = (np.arange(dst_size) + 0.5) * (src_size / dst_size) - 0.5
    return np.clip(coords, 0.0, src_size - 1.0)


def upsample_bilinear(map2d, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resampling with the half-pixel-center convention."""
    src = np.asarray(map2d, dtype=np.float64)
    if src.ndim != 2:
        raise ValueError(f"expected a rank-2 map, got shape {src.shape}")
    if out_h < 1 or out_w < 1:
        raise ValueError("output dims must be >= 1")
    ys = _axis_coords(src.shape[0], out_h)
    xs = _axis_coords(src.shape[1], out_w)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, src.shape[0] - 1)
    x1 = np.minimum(x0 + 1, src.shape[1] - 1)
    ty = (ys - y0)[:, None]
    tx = (xs - x0)[None, :]
    v00 = src[np.ix_(y0, x0)]
    v01 = src[np.ix_(y0, x1)]
    v10 = src[np.ix_(y1, x0)]
    v11 = src[np.ix_(y1, x1)]
    top = v00 + tx * (v01 - v00)
    bottom = v10 + tx * (v11 - v10)
    return top + ty * (bottom - top)


def upsample_nearest(map2d, out_h: int, out_w: int) -> np.ndarray:
    """Nearest-neighbor resampling, same coordinate convention; keeps dtype."""
    src = np.asarray(map2d)
    if src.ndim != 2:
        raise ValueError(f"expected a rank-2 map, got shape {src.shape}")
    ys = np.rint(_axis_coords(src.shape[0], out_h)).astype(np.intp)
    xs = np.rint(_axis_coords(src.shape[1], out_w)).astype(np.intp)
    return src[np.ix_(ys, xs)]


def fuse(maps: list[LocalizationMap], target_h: int, target_w: int) -> LocalizationMap:
    """Elementwise sum of maps after resampling each to the target grid."""
    if not maps:
        raise ValueError("fuse requires at least one map")
    total = np.zeros((target_h, target_w), dtype=np.float64)
    for lm in maps:
        if lm.shape == (target_h, target_w):
            total = total + np.asarray(lm.map, dtype=np.float64)
        else:
            total = total + upsample_bilinear(lm.map, target_h, target_w)
    tag = "+".join(lm.scale_tag for lm in maps if lm.scale_tag)
    return LocalizationMap(map=total, scale_tag=tag, normalized=False)


def fuse_maps(maps: list[LocalizationMap], fuse_raw: bool = False) -> LocalizationMap:
    """Multi-scale fusion at the largest input grid.

    Default path normalizes each map before summing and renormalizes the
    result, so no layer dominates through sheer magnitude; ``fuse_raw``
    sums the maps as-is instead.
    """
    if not maps:
        raise ValueError("fuse_maps requires at least one map")
    target = max((lm.shape for lm in maps), key=lambda s: s[0] * s[1])
    if fuse_raw:
        return fuse(maps, *target)
    return normalize01(fuse([normalize01(lm) for lm in maps], *target))


def normalize01(lm: LocalizationMap) -> LocalizationMap:
    """Scale into [0, 1] by the maximum; a zero map stays zero."""
    arr = np.asarray(lm.map, dtype=np.float64)
    if np.any(arr < 0):
        raise ValueError("normalize01 requires a nonnegative map")
    peak = float(arr.max())
    out = arr / peak if peak > 0.0 else arr
    return LocalizationMap(map=out, scale_tag=lm.scale_tag, normalized=True)


def binarize_for_explanation(lm: LocalizationMap, delta: float) -> np.ndarray:
    """Support mask of the normalized map above delta (uint8 0/1)."""
    if not lm.normalized:
        raise ValueError("binarize_for_explanation requires a normalized map")
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta must be in [0, 1), got {delta}")
    return (np.asarray(lm.map) > delta).astype(np.uint8)
