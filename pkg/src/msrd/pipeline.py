"""End-to-end orchestration: manifest -> weight maps -> localization maps ->
boxes -> metrics, with every stage also usable from written map artifacts.

Maps cross stage boundaries as float32 artifacts (the container dtype), so
running stages separately or in one shot produces bit-identical results.
Internally everything is computed in float64.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .boxes import SegmentationConfig, boxes_from_map
from .discovery import DiscoveryConfig, channel_weights
from .evaluation import (
    EvalRecord,
    EvalSummary,
    PredictionOutcome,
    aggregate,
    iou,
    topk_localization,
    voc_loc,
)
from .grad_weights import alpha_maps
from .localization import (
    LocalizationMap,
    binarize_for_explanation,
    fuse_maps,
    layer_locmap,
    normalize01,
    upsample_bilinear,
    upsample_nearest,
)
from .manifest import SampleManifest, read_manifest
from .tensor_io import read_tensor, write_tensor

FUSED_TAG = "fused"


@dataclass(frozen=True)
class RunConfig:
    layers: tuple[str, ...] = ("conv4", "conv5")
    discovery: DiscoveryConfig = field(default_factory=DiscoveryConfig)
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    fuse_raw: bool = False
    delta: float = 0.25
    workers: int = 1

    def __post_init__(self):
        if not self.layers:
            raise ValueError("at least one layer is required")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must be in [0, 1), got {self.delta}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    def meta(self) -> dict:
        return {
            "layers": "+".join(self.layers),
            "window": self.discovery.window,
            "stride": self.discovery.stride,
            "min_grad": self.discovery.min_value,
            "tau": self.segmentation.tau,
            "mode": self.segmentation.mode,
            "fuse_raw": self.fuse_raw,
            "delta": self.delta,
        }


def _require_layers(sample: SampleManifest, layers: tuple[str, ...]) -> None:
    missing = [name for name in layers if name not in sample.layers]
    if missing:
        raise KeyError(f"sample '{sample.image_id}' has no layer(s) {missing}")


def layer_maps_from_weight_stacks(
    activations_by_layer: dict[str, np.ndarray],
    weight_maps_by_layer: dict[str, np.ndarray],
    cfg: RunConfig,
) -> dict[str, LocalizationMap]:
    """Discovery + map assembly downstream of the gradient weight maps."""
    out = {}
    for name in cfg.layers:
        weights = channel_weights(weight_maps_by_layer[name], cfg.discovery)
        out[name] = layer_locmap(activations_by_layer[name], weights, scale_tag=name)
    return out


def sample_map_artifacts(sample: SampleManifest, cfg: RunConfig) -> dict[str, np.ndarray]:
    """Normalized float32 maps per requested layer, plus the fused map.

    With ``fuse_raw`` the fused artifact is the literal unnormalized sum.
    """
    _require_layers(sample, cfg.layers)
    acts = {}
    gmaps = {}
    for name in cfg.layers:
        files = sample.layers[name]
        acts[name] = np.asarray(read_tensor(files.activations), dtype=np.float64)
        grads = np.asarray(read_tensor(files.gradients), dtype=np.float64)
        gmaps[name] = alpha_maps(acts[name], grads).values
    layer_maps = layer_maps_from_weight_stacks(acts, gmaps, cfg)
    return finalize_artifacts(layer_maps, cfg)


def finalize_artifacts(layer_maps: dict[str, LocalizationMap], cfg: RunConfig) -> dict[str, np.ndarray]:
    """Normalize and quantize stage outputs to their float32 artifact form."""
    artifacts = {
        name: normalize01(lm).map.astype(np.float32) for name, lm in layer_maps.items()
    }
    if len(cfg.layers) >= 2:
        fused = fuse_maps([layer_maps[name] for name in cfg.layers], fuse_raw=cfg.fuse_raw)
        artifacts[FUSED_TAG] = fused.map.astype(np.float32)
    return artifacts


def final_tag(cfg: RunConfig) -> str:
    return FUSED_TAG if len(cfg.layers) >= 2 else cfg.layers[0]


def as_normalized_map(artifact: np.ndarray, tag: str) -> LocalizationMap:
    """Wrap a float32 map artifact for box extraction, normalizing raw ones."""
    arr = np.asarray(artifact)
    peak = float(arr.max()) if arr.size else 0.0
    if peak in (0.0, 1.0):
        return LocalizationMap(map=arr, scale_tag=tag, normalized=True)
    lm = normalize01(LocalizationMap(map=arr, scale_tag=tag))
    return LocalizationMap(map=lm.map.astype(np.float32), scale_tag=tag, normalized=True)


def _map_path(out_dir: Path, image_id: str, tag: str) -> Path:
    return out_dir / f"{image_id}.{tag}.msrd"


def _pool_map(fn, items, workers: int):
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def run_locmap(manifest_path, cfg: RunConfig, out_dir) -> dict[str, dict[str, str]]:
    """Write per-layer and fused map artifacts; returns image_id -> tag -> path."""
    samples = read_manifest(manifest_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def work(sample: SampleManifest) -> tuple[str, dict[str, str]]:
        artifacts = sample_map_artifacts(sample, cfg)
        written = {}
        for tag, arr in artifacts.items():
            path = _map_path(out, sample.image_id, tag)
            write_tensor(arr, path)
            written[tag] = str(path)
        return sample.image_id, written

    return dict(_pool_map(work, samples, cfg.workers))


def run_fuse(cfg: RunConfig, maps_dir, out_dir) -> dict[str, str]:
    """Fuse previously written per-layer maps (refusion of stage artifacts)."""
    maps_dir = Path(maps_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    suffix = f".{cfg.layers[0]}.msrd"
    image_ids = sorted(
        {p.name[: -len(suffix)] for p in maps_dir.glob(f"*{suffix}")}
    )
    if not image_ids:
        raise FileNotFoundError(f"no '*.{cfg.layers[0]}.msrd' maps under {maps_dir}")
    written = {}
    for image_id in image_ids:
        loaded = []
        for name in cfg.layers:
            path = _map_path(maps_dir, image_id, name)
            if not path.is_file():
                raise FileNotFoundError(f"missing stage output {path}")
            loaded.append(LocalizationMap(map=np.asarray(read_tensor(path), dtype=np.float64), scale_tag=name))
        fused = fuse_maps(loaded, fuse_raw=cfg.fuse_raw)
        path = _map_path(out, image_id, FUSED_TAG)
        write_tensor(fused.map.astype(np.float32), path)
        written[image_id] = str(path)
    return written


def _final_artifact(sample: SampleManifest, cfg: RunConfig, maps_dir) -> np.ndarray:
    if maps_dir is None:
        return sample_map_artifacts(sample, cfg)[final_tag(cfg)]
    path = _map_path(Path(maps_dir), sample.image_id, final_tag(cfg))
    if not path.is_file():
        raise FileNotFoundError(f"missing stage output {path}")
    return read_tensor(path)


def sample_boxes(sample: SampleManifest, cfg: RunConfig, maps_dir=None):
    lm = as_normalized_map(_final_artifact(sample, cfg, maps_dir), final_tag(cfg))
    return boxes_from_map(lm, cfg.segmentation, sample.image_width, sample.image_height)


def run_boxes(manifest_path, cfg: RunConfig, maps_dir=None) -> dict[str, list[dict]]:
    """Boxes per image from the final (fused or single-layer) map."""
    samples = read_manifest(manifest_path)

    def work(sample: SampleManifest) -> tuple[str, list[dict]]:
        found = sample_boxes(sample, cfg, maps_dir)
        return sample.image_id, [
            {"x_min": b.x_min, "y_min": b.y_min, "x_max": b.x_max, "y_max": b.y_max}
            for b in found
        ]

    return dict(_pool_map(work, samples, cfg.workers))


def evaluate_sample(sample: SampleManifest, cfg: RunConfig, maps_dir=None) -> EvalRecord:
    """Score one image: boxes against ground truth plus the pixel-ratio metric."""
    lm = as_normalized_map(_final_artifact(sample, cfg, maps_dir), final_tag(cfg))
    found = boxes_from_map(lm, cfg.segmentation, sample.image_width, sample.image_height)
    boxes_per_class = {cls: found for cls in set(sample.predicted_classes)}

    predictions = []
    for cls in sample.predicted_classes:
        correct = cls in sample.true_labels
        gt = sample.boxes_of_class(cls)
        best = max((iou(p, g) for p in found for g in gt), default=0.0)
        predictions.append(PredictionOutcome(class_index=cls, correct=correct, best_iou=best))

    voc_value = None
    if sample.true_labels:
        target = sample.true_labels[0]
        gt = sample.boxes_of_class(target)
        if gt:
            mask = binarize_for_explanation(lm, cfg.delta)
            mask_img = upsample_nearest(mask, sample.image_height, sample.image_width)
            voc_value = voc_loc(mask_img, gt)

    return EvalRecord(
        image_id=sample.image_id,
        predictions=tuple(predictions),
        top1_hit=topk_localization(sample, boxes_per_class, 1),
        top5_hit=topk_localization(sample, boxes_per_class, 5),
        voc_loc=voc_value,
    )


def evaluate_samples(samples: list[SampleManifest], cfg: RunConfig, maps_dir=None) -> EvalSummary:
    scored = [s for s in samples if s.predicted_classes]
    for sample in samples:
        if not sample.predicted_classes:
            warnings.warn(f"sample '{sample.image_id}' has no predictions, skipped", RuntimeWarning)
    records = _pool_map(lambda s: evaluate_sample(s, cfg, maps_dir), scored, cfg.workers)
    return aggregate(records, meta=cfg.meta(), skipped=len(samples) - len(scored))


def run_eval(manifest_path, cfg: RunConfig, maps_dir=None) -> EvalSummary:
    return evaluate_samples(read_manifest(manifest_path), cfg, maps_dir)


def run_heatmap(manifest_path, cfg: RunConfig, out_dir, maps_dir=None) -> dict[str, str]:
    """8-bit grayscale PNGs of the final normalized map at image size."""
    from PIL import Image

    samples = read_manifest(manifest_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {}
    for sample in samples:
        lm = as_normalized_map(_final_artifact(sample, cfg, maps_dir), final_tag(cfg))
        big = upsample_bilinear(lm.map, sample.image_height, sample.image_width)
        pixels = np.clip(np.rint(big * 255.0), 0, 255).astype(np.uint8)
        path = out / f"{sample.image_id}.png"
        Image.fromarray(pixels, mode="L").save(path)
        written[sample.image_id] = str(path)
    return written
