"""Per-image sample manifests linking tensor files, labels and boxes."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .tensor_io import ValidationError, read_tensor_header


class SchemaError(ValueError):
    """Manifest JSON does not match the expected schema."""


@dataclass(frozen=True)
class BoundingBox:
    """Integer pixel rectangle, inclusive coordinates, original-image space."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValidationError(f"degenerate box {self.as_tuple()}")

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    @property
    def width(self) -> int:
        return self.x_max - self.x_min + 1

    @property
    def height(self) -> int:
        return self.y_max - self.y_min + 1

    @property
    def area(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class LayerFiles:
    activations: Path
    gradients: Path


@dataclass(frozen=True)
class SampleManifest:
    image_id: str
    image_width: int
    image_height: int
    true_labels: tuple[int, ...]
    predicted_classes: tuple[int, ...]
    gt_boxes: tuple[tuple[int, BoundingBox], ...]
    layers: dict[str, LayerFiles] = field(default_factory=dict)

    def boxes_of_class(self, cls: int) -> list[BoundingBox]:
        return [b for c, b in self.gt_boxes if c == cls]


_REQUIRED = (
    "image_id",
    "image_width",
    "image_height",
    "true_labels",
    "predicted_classes",
    "gt_boxes",
    "layers",
)


def _require(obj: dict, key: str, idx: int):
    if key not in obj:
        raise SchemaError(f"sample {idx}: missing required field '{key}'")
    return obj[key]


def _parse_sample(obj, idx: int, base: Path, check_shapes: bool) -> SampleManifest:
    if not isinstance(obj, dict):
        raise SchemaError(f"sample {idx}: expected an object, got {type(obj).__name__}")
    for key in _REQUIRED:
        _require(obj, key, idx)

    image_id = str(obj["image_id"])
    width, height = obj["image_width"], obj["image_height"]
    for name, value in (("image_width", width), ("image_height", height)):
        if not isinstance(value, int) or value < 1:
            raise SchemaError(f"sample {idx} ({image_id}): '{name}' must be a positive integer")

    predicted = tuple(int(c) for c in obj["predicted_classes"])
    if len(predicted) > 5:
        raise SchemaError(
            f"sample {idx} ({image_id}): at most 5 predicted_classes allowed, got {len(predicted)}"
        )

    gt_boxes = []
    for bi, raw in enumerate(obj["gt_boxes"]):
        try:
            box = BoundingBox(int(raw["x_min"]), int(raw["y_min"]), int(raw["x_max"]), int(raw["y_max"]))
            cls = int(raw["class"])
        except KeyError as exc:
            raise SchemaError(f"sample {idx} ({image_id}): gt_box {bi} missing field {exc}") from None
        if box.x_min < 0 or box.y_min < 0 or box.x_max >= width or box.y_max >= height:
            raise ValidationError(
                f"sample {idx} ({image_id}): gt_box {bi} {box.as_tuple()} exceeds "
                f"image bounds {width}x{height}"
            )
        gt_boxes.append((cls, box))

    layers = {}
    for name, files in obj["layers"].items():
        for part in ("activations", "gradients"):
            if part not in files:
                raise SchemaError(f"sample {idx} ({image_id}): layer '{name}' missing '{part}' path")
        entry = LayerFiles(base / files["activations"], base / files["gradients"])
        for p in (entry.activations, entry.gradients):
            if not p.is_file():
                raise ValidationError(f"sample {idx} ({image_id}): missing tensor file {p}")
        if check_shapes:
            a_shape = read_tensor_header(entry.activations)
            g_shape = read_tensor_header(entry.gradients)
            if a_shape != g_shape:
                raise ValidationError(
                    f"sample {idx} ({image_id}): layer '{name}' shape mismatch "
                    f"activations {a_shape} vs gradients {g_shape}"
                )
        layers[name] = entry

    return SampleManifest(
        image_id=image_id,
        image_width=width,
        image_height=height,
        true_labels=tuple(int(c) for c in obj["true_labels"]),
        predicted_classes=predicted,
        gt_boxes=tuple(gt_boxes),
        layers=layers,
    )


def read_manifest(path, check_shapes: bool = False) -> list[SampleManifest]:
    """Load and validate a manifest; tensor paths resolve relative to it."""
    path = Path(path)
    raw = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(raw, list):
        raise SchemaError("manifest root must be a JSON array of samples")
    base = path.resolve().parent
    return [_parse_sample(obj, idx, base, check_shapes) for idx, obj in enumerate(raw)]


def write_manifest(samples: list[SampleManifest], path) -> None:
    """Serialize samples; tensor paths are written relative to the manifest."""
    path = Path(path)
    base = path.resolve().parent
    out = []
    for s in samples:
        out.append(
            {
                "image_id": s.image_id,
                "image_width": s.image_width,
                "image_height": s.image_height,
                "true_labels": list(s.true_labels),
                "predicted_classes": list(s.predicted_classes),
                "gt_boxes": [
                    {"class": c, "x_min": b.x_min, "y_min": b.y_min, "x_max": b.x_max, "y_max": b.y_max}
                    for c, b in s.gt_boxes
                ],
                "layers": {
                    name: {
                        "activations": os.path.relpath(files.activations, base),
                        "gradients": os.path.relpath(files.gradients, base),
                    }
                    for name, files in s.layers.items()
                },
            }
        )
    path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n", encoding="utf-8")
