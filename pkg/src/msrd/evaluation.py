"""Localization metrics: top-k error with the IoU > 0.5 rule, and the
pixel-ratio accuracy inside/(outside + box area) for thresholded masks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .manifest import BoundingBox, SampleManifest


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union with inclusive pixel areas."""
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min) + 1
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min) + 1
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return inter / union


def topk_localization(sample: SampleManifest, boxes_per_class: dict, k: int) -> bool:
    """Hit iff some rank <= k prediction is class-correct and one of its
    boxes exceeds 0.5 IoU (strictly) against a ground-truth box of that class."""
    for cls in sample.predicted_classes[:k]:
        if cls not in sample.true_labels:
            continue
        gt = sample.boxes_of_class(cls)
        for candidate in boxes_per_class.get(cls, []):
            if any(iou(candidate, g) > 0.5 for g in gt):
                return True
    return False


def _union_box_mask(boxes: list[BoundingBox], height: int, width: int) -> np.ndarray:
    canvas = np.zeros((height, width), dtype=bool)
    for b in boxes:
        canvas[b.y_min : b.y_max + 1, b.x_min : b.x_max + 1] = True
    return canvas


def voc_loc(mask, gt_boxes: list[BoundingBox]) -> float:
    """inside / (outside + area) over the union of the class's boxes.

    ``mask`` is a binary map at image resolution; inside/outside count its
    nonzero pixels against the box union, area is the union's pixel area.
    """
    m = np.asarray(mask).astype(bool)
    if m.ndim != 2:
        raise ValueError(f"expected a rank-2 mask, got shape {m.shape}")
    if not gt_boxes:
        raise ValueError("voc_loc is undefined without ground-truth boxes")
    union = _union_box_mask(gt_boxes, *m.shape)
    inside = int(np.count_nonzero(m & union))
    outside = int(np.count_nonzero(m & ~union))
    area = int(np.count_nonzero(union))
    return inside / (outside + area)


@dataclass(frozen=True)
class PredictionOutcome:
    class_index: int
    correct: bool
    best_iou: float


@dataclass(frozen=True)
class EvalRecord:
    image_id: str
    predictions: tuple[PredictionOutcome, ...]
    top1_hit: bool
    top5_hit: bool
    voc_loc: float | None = None


@dataclass(frozen=True)
class EvalSummary:
    n_images: int
    top1_error: float
    top5_error: float
    mean_voc_loc: float | None
    skipped: int = 0
    meta: dict = field(default_factory=dict)


def aggregate(records: list[EvalRecord], meta: dict | None = None, skipped: int = 0) -> EvalSummary:
    """Fold per-image records into the error percentages and mean accuracy."""
    if not records:
        raise ValueError("aggregate requires at least one record")
    n = len(records)
    hits1 = sum(1 for r in records if r.top1_hit)
    hits5 = sum(1 for r in records if r.top5_hit)
    voc_values = [r.voc_loc for r in records if r.voc_loc is not None]
    mean_voc = sum(voc_values) / len(voc_values) if voc_values else None
    return EvalSummary(
        n_images=n,
        top1_error=100.0 * (1.0 - hits1 / n),
        top5_error=100.0 * (1.0 - hits5 / n),
        mean_voc_loc=mean_voc,
        skipped=skipped,
        meta=dict(meta or {}),
    )


def _render_json(value, indent: int = 0) -> str:
    # hand-rolled so every float prints with exactly 6 decimal places
    pad = "  " * indent
    if isinstance(value, float):
        return f"{value:.6f}"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if value is None:
        return "null"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [
            f'{pad}  "{key}": {_render_json(value[key], indent + 1)}'
            for key in sorted(value)
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [f"{pad}  {_render_json(v, indent + 1)}" for v in value]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def summary_dict(summary: EvalSummary) -> dict:
    return {
        "meta": summary.meta,
        "n_images": summary.n_images,
        "top1_error": summary.top1_error,
        "top5_error": summary.top5_error,
        "mean_voc_loc": summary.mean_voc_loc,
        "skipped": summary.skipped,
    }


def report_json(summary: EvalSummary) -> str:
    """Deterministic report with all floats at 6 decimal places."""
    return _render_json(summary_dict(summary)) + "\n"


def report_text(summary: EvalSummary) -> str:
    """Aligned table mirroring the error-per-configuration layout."""
    meta = summary.meta
    config = " ".join(
        str(meta[key])
        for key in ("layers", "window", "stride", "tau", "delta")
        if key in meta
    ) or "-"
    voc = f"{summary.mean_voc_loc:.6f}" if summary.mean_voc_loc is not None else "-"
    header = f"{'config':<40} {'images':>6} {'top-1 err':>10} {'top-5 err':>10} {'voc-loc':>10} {'skipped':>8}"
    row = (
        f"{config:<40} {summary.n_images:>6} {summary.top1_error:>10.6f} "
        f"{summary.top5_error:>10.6f} {voc:>10} {summary.skipped:>8}"
    )
    return header + "\n" + row + "\n"
