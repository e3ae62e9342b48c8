"""Synthetic activation/gradient fixtures with planted ground truth.

Each image plants 1..N anisotropic Gaussian objects on a random subset of
channels of every layer grid.  The finest grid renders objects faithfully;
coarser grids snap object centers to their cells and attenuate small
objects, so fine layers carry the small-object signal that coarse layers
lose.  Gradients are proportional to activations plus noise, which puts
the alpha-map local maxima on the planted objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .manifest import BoundingBox, LayerFiles, SampleManifest, write_manifest
from .tensor_io import write_tensor

# level fraction used to size bumps: exp(-LEVEL_R^2 / 2) == 0.2, so the
# 20%-of-peak level set of a bump has the object's half-extent
_LEVEL_R = math.sqrt(2.0 * math.log(5.0))


@dataclass(frozen=True)
class SynthSpec:
    seed: int = 0
    n_images: int = 8
    image_width: int = 224
    image_height: int = 224
    layer_grids: tuple[tuple[str, int], ...] = (("conv4", 28), ("conv5", 14))
    channels: int = 8
    min_objects: int = 1
    max_objects: int = 3
    min_scale: float = 0.05
    max_scale: float = 0.5
    noise: float = 0.02
    n_classes: int = 1000

    def __post_init__(self):
        for _, grid in self.layer_grids:
            if self.image_width % grid or self.image_height % grid:
                raise ValueError(f"grid {grid} does not divide image dims evenly")
        if not (0.0 < self.min_scale <= self.max_scale < 1.0):
            raise ValueError("object scales must satisfy 0 < min <= max < 1")
        if self.min_objects < 1 or self.max_objects < self.min_objects:
            raise ValueError("object count range invalid")


@dataclass
class _Object:
    cx: float
    cy: float
    hx: float
    hy: float
    amp: float
    channel_amps: np.ndarray  # K, zero for unused channels

    def frac_scale(self, image_w: int, image_h: int) -> float:
        # dominant fractional extent; drives coarse-layer attenuation
        return max(2 * self.hx / image_w, 2 * self.hy / image_h)


def _separated(obj: _Object, placed: list[_Object]) -> bool:
    for other in placed:
        dx = abs(obj.cx - other.cx)
        dy = abs(obj.cy - other.cy)
        if dx <= 1.25 * (obj.hx + other.hx) and dy <= 1.25 * (obj.hy + other.hy):
            return False
    return True


def _sample_objects(spec: SynthSpec, rng: np.random.Generator) -> list[_Object]:
    count = int(rng.integers(spec.min_objects, spec.max_objects + 1))
    placed: list[_Object] = []
    for _ in range(count):
        for _attempt in range(40):
            sx = float(rng.uniform(spec.min_scale, spec.max_scale))
            sy = float(np.clip(sx * rng.uniform(0.8, 1.25), spec.min_scale, spec.max_scale))
            hx = sx * spec.image_width / 2.0
            hy = sy * spec.image_height / 2.0
            cx = float(rng.uniform(hx, spec.image_width - 1 - hx))
            cy = float(rng.uniform(hy, spec.image_height - 1 - hy))
            amps = np.where(rng.random(spec.channels) < 0.8, rng.uniform(0.8, 1.2, spec.channels), 0.0)
            if not amps.any():
                amps[int(rng.integers(spec.channels))] = 1.0
            candidate = _Object(cx, cy, hx, hy, float(rng.uniform(0.9, 1.1)), amps)
            if _separated(candidate, placed):
                placed.append(candidate)
                break
    return placed


def _bump(grid: int, cell_x: float, cell_y: float, cx: float, cy: float,
          sigma_x: float, sigma_y: float) -> np.ndarray:
    xs = (np.arange(grid) + 0.5) * cell_x
    ys = (np.arange(grid) + 0.5) * cell_y
    u = (xs - cx) / sigma_x
    v = (ys - cy) / sigma_y
    return np.exp(-0.5 * (v[:, None] ** 2 + u[None, :] ** 2))


def _render_layer(spec: SynthSpec, grid: int, finest: bool, objects: list[_Object],
                  rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    cell_x = spec.image_width / grid
    cell_y = spec.image_height / grid
    acts = rng.uniform(0.0, spec.noise, (spec.channels, grid, grid))
    for obj in objects:
        if finest:
            cx, cy = obj.cx, obj.cy
            sigma_x = max(obj.hx / _LEVEL_R, 0.35 * cell_x)
            sigma_y = max(obj.hy / _LEVEL_R, 0.35 * cell_y)
            layer_amp = obj.amp
        else:
            # coarse grids localize only to their cells and respond weakly
            # to objects much smaller than a cell
            cx = (math.floor(obj.cx / cell_x) + 0.5) * cell_x
            cy = (math.floor(obj.cy / cell_y) + 0.5) * cell_y
            sigma_x = max(0.6 * obj.hx, 0.125 * cell_x)
            sigma_y = max(0.6 * obj.hy, 0.125 * cell_y)
            s = obj.frac_scale(spec.image_width, spec.image_height)
            layer_amp = obj.amp * (0.15 + 0.85 * min(1.0, s / 0.15))
        shape = _bump(grid, cell_x, cell_y, cx, cy, sigma_x, sigma_y)
        acts += obj.channel_amps[:, None, None] * layer_amp * shape[None, :, :]
    # rectified backprop: gradients vanish exactly outside the firing support,
    # so channels that only carry background noise get zero weight maps
    support = acts > 2.0 * spec.noise
    core = np.where(support, acts, 0.0)
    # per-channel gain balances channel mass so every firing channel's alpha
    # peak lands near 1/3 regardless of how much area it covers
    mass = np.sum(core**4, axis=(1, 2))
    peak = core.max(axis=(1, 2))
    gain = np.where(mass > 0, peak**2 / np.maximum(mass, 1e-12), 1.0)
    jitter = rng.normal(0.0, 0.5 * spec.noise, acts.shape)
    grads = gain[:, None, None] * (acts + jitter) * support
    return acts, grads


def _gt_box(obj: _Object, spec: SynthSpec) -> BoundingBox:
    x_min = max(0, int(round(obj.cx - obj.hx)))
    y_min = max(0, int(round(obj.cy - obj.hy)))
    x_max = min(spec.image_width - 1, int(round(obj.cx + obj.hx)))
    y_max = min(spec.image_height - 1, int(round(obj.cy + obj.hy)))
    return BoundingBox(x_min, y_min, max(x_min, x_max), max(y_min, y_max))


def _distractors(rng: np.random.Generator, n_classes: int, taken: int, count: int) -> list[int]:
    picked: list[int] = []
    while len(picked) < count:
        c = int(rng.integers(0, n_classes))
        if c != taken and c not in picked:
            picked.append(c)
    return picked


def generate(spec: SynthSpec, out_dir) -> Path:
    """Write tensors plus manifest.json into out_dir; returns the manifest path."""
    out = Path(out_dir)
    tensor_dir = out / "tensors"
    tensor_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    finest_grid = max(g for _, g in spec.layer_grids)

    samples = []
    for idx in range(spec.n_images):
        image_id = f"synth_{idx:04d}"
        cls = int(rng.integers(0, spec.n_classes))
        objects = _sample_objects(spec, rng)
        layers = {}
        for name, grid in spec.layer_grids:
            acts, grads = _render_layer(spec, grid, grid == finest_grid, objects, rng)
            files = LayerFiles(
                activations=tensor_dir / f"{image_id}.{name}.acts.msrd",
                gradients=tensor_dir / f"{image_id}.{name}.grads.msrd",
            )
            write_tensor(acts.astype(np.float32), files.activations)
            write_tensor(grads.astype(np.float32), files.gradients)
            layers[name] = files
        predicted = [cls] + _distractors(rng, spec.n_classes, cls, 4)
        samples.append(
            SampleManifest(
                image_id=image_id,
                image_width=spec.image_width,
                image_height=spec.image_height,
                true_labels=(cls,),
                predicted_classes=tuple(predicted),
                gt_boxes=tuple((cls, _gt_box(obj, spec)) for obj in objects),
                layers=layers,
            )
        )
    manifest_path = out / "manifest.json"
    write_manifest(samples, manifest_path)
    return manifest_path
