"""Threshold segmentation and connected-components box extraction."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .localization import LocalizationMap
from .manifest import BoundingBox

MODES = ("largest", "all")


@dataclass(frozen=True)
class SegmentationConfig:
    tau: float = 0.2
    mode: str = "largest"
    # connectivity is fixed at 8

    def __post_init__(self):
        if not 0.0 <= self.tau < 1.0:
            raise ValueError(f"tau must be in [0, 1), got {self.tau}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got '{self.mode}'")


def threshold_mask(map2d, tau: float) -> np.ndarray:
    """Boolean mask of pixels above tau times the map maximum."""
    arr = np.asarray(map2d.map if isinstance(map2d, LocalizationMap) else map2d)
    return arr > tau * float(arr.max())


def connected_components(mask) -> list[np.ndarray]:
    """8-connected components of a binary mask via two-pass union-find.

    Each component is an (n, 2) array of (i, j) pixels in row-major order;
    components are ordered by their first pixel in row-major order.
    """
    m = np.asarray(mask).astype(bool)
    if m.ndim != 2:
        raise ValueError(f"expected a rank-2 mask, got shape {m.shape}")
    h, w = m.shape
    labels = np.zeros((h, w), dtype=np.int64)
    parent = [0]  # parent[0] unused; labels start at 1

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(x: int, y: int) -> None:
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[max(rx, ry)] = min(rx, ry)

    next_label = 1
    for i in range(h):
        for j in range(w):
            if not m[i, j]:
                continue
            neighbors = []
            if i > 0:
                if j > 0 and labels[i - 1, j - 1]:
                    neighbors.append(labels[i - 1, j - 1])
                if labels[i - 1, j]:
                    neighbors.append(labels[i - 1, j])
                if j + 1 < w and labels[i - 1, j + 1]:
                    neighbors.append(labels[i - 1, j + 1])
            if j > 0 and labels[i, j - 1]:
                neighbors.append(labels[i, j - 1])
            if neighbors:
                lab = min(neighbors)
                labels[i, j] = lab
                for other in neighbors:
                    union(lab, other)
            else:
                labels[i, j] = next_label
                parent.append(next_label)
                next_label += 1

    groups: dict[int, list[tuple[int, int]]] = {}
    order: list[int] = []
    for i in range(h):
        for j in range(w):
            if not m[i, j]:
                continue
            root = find(labels[i, j])
            if root not in groups:
                groups[root] = []
                order.append(root)
            groups[root].append((i, j))
    return [np.array(groups[root], dtype=np.int64) for root in order]


def _scale_box(i0: int, i1: int, j0: int, j1: int, map_h: int, map_w: int,
               image_w: int, image_h: int) -> BoundingBox:
    # map pixel (i, j) covers the image block [j*sx, (j+1)*sx) x [i*sy, (i+1)*sy)
    sx = image_w / map_w
    sy = image_h / map_h
    x_min = max(0, math.floor(j0 * sx))
    y_min = max(0, math.floor(i0 * sy))
    x_max = min(image_w - 1, math.ceil((j1 + 1) * sx) - 1)
    y_max = min(image_h - 1, math.ceil((i1 + 1) * sy) - 1)
    return BoundingBox(x_min, y_min, x_max, y_max)


def boxes_from_map(lm: LocalizationMap, cfg: SegmentationConfig,
                   image_w: int, image_h: int) -> list[BoundingBox]:
    """Tight component boxes rescaled to image pixels; [] for an empty mask."""
    if not lm.normalized:
        raise ValueError("boxes_from_map requires a normalized map")
    mask = threshold_mask(lm.map, cfg.tau)
    components = connected_components(mask)
    if not components:
        return []
    if cfg.mode == "largest":
        best = components[0]
        for comp in components[1:]:
            if len(comp) > len(best):  # strict: ties keep the earliest
                best = comp
        components = [best]
    map_h, map_w = mask.shape
    out = []
    for comp in components:
        i0, j0 = comp.min(axis=0)
        i1, j1 = comp.max(axis=0)
        out.append(_scale_box(int(i0), int(i1), int(j0), int(j1), map_h, map_w, image_w, image_h))
    return out
