"""Shared fixtures and independent test oracles."""

from __future__ import annotations

from collections import deque
from pathlib import Path

import numpy as np
import pytest

from msrd.manifest import BoundingBox, LayerFiles, SampleManifest, write_manifest
from msrd.tensor_io import write_tensor


def flood_fill_components(mask) -> list[np.ndarray]:
    """Naive BFS flood-fill oracle for 8-connected components.

    Component order and in-component pixel order are both row-major, the
    same contract as the production implementation.
    """
    m = np.asarray(mask).astype(bool)
    h, w = m.shape
    seen = np.zeros_like(m)
    components = []
    for si in range(h):
        for sj in range(w):
            if not m[si, sj] or seen[si, sj]:
                continue
            pixels = []
            queue = deque([(si, sj)])
            seen[si, sj] = True
            while queue:
                i, j = queue.popleft()
                pixels.append((i, j))
                for di in (-1, 0, 1):
                    for dj in (-1, 0, 1):
                        ni, nj = i + di, j + dj
                        if 0 <= ni < h and 0 <= nj < w and m[ni, nj] and not seen[ni, nj]:
                            seen[ni, nj] = True
                            queue.append((ni, nj))
            pixels.sort()
            components.append(np.array(pixels, dtype=np.int64))
    return components


def build_manifest(
    tmp_path: Path,
    per_image_layers: list[dict],
    image_width: int = 224,
    image_height: int = 224,
    gt_boxes=None,
    true_labels=(3,),
    predicted=(3, 10, 11, 12, 13),
) -> Path:
    """Write tensors + manifest for hand-crafted fixtures.

    per_image_layers: one dict per image mapping layer name to an
    (activations, gradients) pair of K x H x W arrays.
    """
    samples = []
    tensor_dir = tmp_path / "tensors"
    tensor_dir.mkdir(parents=True, exist_ok=True)
    for idx, layer_arrays in enumerate(per_image_layers):
        image_id = f"img_{idx:03d}"
        layers = {}
        for name, (acts, grads) in layer_arrays.items():
            files = LayerFiles(
                activations=tensor_dir / f"{image_id}.{name}.acts.msrd",
                gradients=tensor_dir / f"{image_id}.{name}.grads.msrd",
            )
            write_tensor(np.asarray(acts, dtype=np.float32), files.activations)
            write_tensor(np.asarray(grads, dtype=np.float32), files.gradients)
            layers[name] = files
        boxes = gt_boxes[idx] if gt_boxes is not None else [BoundingBox(0, 0, image_width - 1, image_height - 1)]
        samples.append(
            SampleManifest(
                image_id=image_id,
                image_width=image_width,
                image_height=image_height,
                true_labels=tuple(true_labels),
                predicted_classes=tuple(predicted),
                gt_boxes=tuple((true_labels[0], b) for b in boxes),
                layers=layers,
            )
        )
    manifest_path = tmp_path / "manifest.json"
    write_manifest(samples, manifest_path)
    return manifest_path


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
