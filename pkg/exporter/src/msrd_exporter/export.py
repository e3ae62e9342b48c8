"""Hook a classifier, run forward/backward per image, write tensors + manifest."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image
from torchvision import models, transforms

from .container import write_tensor

# post-activation outputs of the last conv of blocks 4 and 5
LAYER_TAPS = {
    "vgg16": {"conv4": "features.22", "conv5": "features.29"},
    "vgg19": {"conv4": "features.26", "conv5": "features.35"},
}

SCORE_CONVENTIONS = ("exp_logit", "logit")

_PREPROCESS = transforms.Compose(
    [
        transforms.Resize(256),
        transforms.CenterCrop(224),
        transforms.ToTensor(),
        transforms.Normalize(mean=[0.485, 0.456, 0.406], std=[0.229, 0.224, 0.225]),
    ]
)


@dataclass(frozen=True)
class ExportSpec:
    model: str = "vgg16"
    layers: tuple[str, ...] = ("conv4", "conv5")
    score: str = "exp_logit"
    pretrained: bool = True
    seed: int = 0  # weight init seed when not pretrained
    layer_taps: dict = field(default_factory=dict)  # overrides name -> module path

    def __post_init__(self):
        if self.score not in SCORE_CONVENTIONS:
            raise ValueError(f"score must be one of {SCORE_CONVENTIONS}, got '{self.score}'")


def _resolve_taps(model: torch.nn.Module, spec: ExportSpec) -> dict[str, torch.nn.Module]:
    named = dict(model.named_modules())
    paths = dict(LAYER_TAPS.get(spec.model, {}))
    paths.update(spec.layer_taps)
    taps = {}
    for layer in spec.layers:
        path = paths.get(layer, layer)
        if path not in named:
            known = ", ".join(sorted(paths)) or "none"
            raise KeyError(
                f"layer '{layer}' not found in model '{spec.model}'; known layer names: {known}; "
                f"or pass a module path (available: {', '.join(list(named)[1:8])}, ...)"
            )
        taps[layer] = named[path]
    return taps


def _load_model(spec: ExportSpec) -> torch.nn.Module:
    if spec.pretrained:
        model = models.get_model(spec.model, weights="DEFAULT")
    else:
        torch.manual_seed(spec.seed)
        model = models.get_model(spec.model, weights=None)
    model.eval()
    return model


def _read_image_list(images) -> list[dict]:
    """Accepts a JSON path or an in-memory list of {path, label?, boxes?}."""
    if isinstance(images, (str, Path)):
        entries = json.loads(Path(images).read_text(encoding="utf-8"))
    else:
        entries = list(images)
    if not isinstance(entries, list):
        raise ValueError("image list must be a JSON array of {path, label, boxes} objects")
    return entries


def export(spec: ExportSpec, images, out_dir) -> Path:
    """Run the classifier over the image list; returns the manifest path.

    ``images`` is a JSON file (or list) of objects with ``path``, optional
    integer ``label`` (defaults to the top-1 prediction) and optional
    ``boxes`` ([{class, x_min, y_min, x_max, y_max}]) in original-image
    pixel coordinates.
    """
    out = Path(out_dir)
    tensor_dir = out / "tensors"
    tensor_dir.mkdir(parents=True, exist_ok=True)
    model = _load_model(spec)
    taps = _resolve_taps(model, spec)

    captured_acts: dict[str, torch.Tensor] = {}
    captured_grads: dict[str, torch.Tensor] = {}
    handles = []
    for name, module in taps.items():
        def forward_hook(mod, inputs, output, name=name):
            captured_acts[name] = output.detach()[0]
            output.register_hook(lambda g, name=name: captured_grads.__setitem__(name, g.detach()[0]))

        handles.append(module.register_forward_hook(forward_hook))

    samples = []
    try:
        for entry in _read_image_list(images):
            path = Path(entry["path"])
            try:
                with Image.open(path) as img:
                    width, height = img.size
                    batch = _PREPROCESS(img.convert("RGB")).unsqueeze(0)
            except (OSError, SyntaxError) as exc:
                warnings.warn(f"skipping undecodable image {path}: {exc}", RuntimeWarning, stacklevel=2)
                continue

            captured_acts.clear()
            captured_grads.clear()
            model.zero_grad(set_to_none=True)
            with torch.enable_grad():
                logits = model(batch)[0]
                top5 = [int(c) for c in torch.topk(logits, k=min(5, logits.numel())).indices]
                target = int(entry.get("label", top5[0]))
                score = logits[target].exp() if spec.score == "exp_logit" else logits[target]
                score.backward()

            image_id = path.stem
            layers = {}
            for name in spec.layers:
                acts = captured_acts[name].numpy()
                grads = captured_grads[name].numpy()
                if acts.shape != grads.shape:
                    raise RuntimeError(f"{image_id}/{name}: activation/gradient shape mismatch")
                files = {
                    "activations": f"tensors/{image_id}.{name}.acts.msrd",
                    "gradients": f"tensors/{image_id}.{name}.grads.msrd",
                }
                write_tensor(acts, out / files["activations"])
                write_tensor(grads, out / files["gradients"])
                layers[name] = files
            samples.append(
                {
                    "image_id": image_id,
                    "image_width": width,
                    "image_height": height,
                    "true_labels": [target],
                    "predicted_classes": top5,
                    "gt_boxes": list(entry.get("boxes", [])),
                    "layers": layers,
                }
            )
    finally:
        for handle in handles:
            handle.remove()

    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(samples, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    meta = {
        "model": spec.model,
        "pretrained": spec.pretrained,
        "score": spec.score,
        "layers": {name: (dict(LAYER_TAPS.get(spec.model, {})) | spec.layer_taps).get(name, name) for name in spec.layers},
        "preprocess": "resize256-centercrop224-imagenet-norm",
    }
    (out / "export_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest_path
