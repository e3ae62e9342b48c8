"""Exporter contract: structure, shapes, determinism, consumer compatibility.

The consumer toolkit is exercised only through its public surfaces (the
``msrd`` CLI and the on-disk formats), never by importing it.
"""

import hashlib
import json
import os
import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner
from PIL import Image

from msrd_exporter.cli import main as export_cli
from msrd_exporter.export import ExportSpec, export

MSRD_BIN = shutil.which("msrd")


def make_images(tmp_path, count=1, size=96):
    rng = np.random.default_rng(5)
    entries = []
    for i in range(count):
        path = tmp_path / f"img_{i}.png"
        Image.fromarray(rng.integers(0, 255, (size, size, 3), dtype=np.uint8)).save(path)
        entries.append({"path": str(path), "label": 17, "boxes": [
            {"class": 17, "x_min": 4, "y_min": 4, "x_max": size // 2, "y_max": size // 2}
        ]})
    listing = tmp_path / "images.json"
    listing.write_text(json.dumps(entries))
    return listing


@pytest.fixture(scope="module")
def exported(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("export")
    listing = make_images(tmp_path, count=1)
    spec = ExportSpec(pretrained=False, seed=1)
    manifest = export(spec, listing, tmp_path / "out")
    return tmp_path, listing, manifest


def test_structural_one_image_two_layers(exported):
    _, _, manifest = exported
    samples = json.loads(manifest.read_text())
    assert len(samples) == 1
    tensors = list((manifest.parent / "tensors").iterdir())
    assert len(tensors) == 4
    assert set(samples[0]["layers"]) == {"conv4", "conv5"}
    assert len(samples[0]["predicted_classes"]) == 5
    assert (manifest.parent / "export_meta.json").is_file()


def test_conv_shapes_for_224_input(exported):
    import struct

    _, _, manifest = exported
    samples = json.loads(manifest.read_text())

    def shape_of(rel):
        raw = (manifest.parent / rel).read_bytes()
        rank = raw[6]
        return struct.unpack_from(f"<{rank}I", raw, 7)

    assert shape_of(samples[0]["layers"]["conv5"]["activations"]) == (512, 14, 14)
    assert shape_of(samples[0]["layers"]["conv4"]["activations"]) == (512, 28, 28)
    for layer in ("conv4", "conv5"):
        acts = shape_of(samples[0]["layers"][layer]["activations"])
        grads = shape_of(samples[0]["layers"][layer]["gradients"])
        assert acts == grads


def test_export_deterministic(exported, tmp_path):
    base, listing, manifest = exported

    def digest(root: Path):
        return {
            str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*")) if p.is_file()
        }

    export(ExportSpec(pretrained=False, seed=1), listing, tmp_path / "again")
    assert digest(tmp_path / "again") == digest(manifest.parent)


@pytest.mark.skipif(MSRD_BIN is None, reason="msrd CLI not installed")
def test_consumer_pipeline_accepts_export(exported, tmp_path):
    _, _, manifest = exported
    result = subprocess.run(
        [MSRD_BIN, "eval", "--manifest", str(manifest), "--out", str(tmp_path / "report.json")],
        capture_output=True, text=True,
    )
    assert result.returncode == 0, result.stderr
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["n_images"] == 1


def test_missing_layer_lists_known_names(tmp_path):
    listing = make_images(tmp_path)
    with pytest.raises(KeyError, match="conv4, conv5"):
        export(ExportSpec(layers=("conv7",), pretrained=False), listing, tmp_path / "out")


def test_undecodable_image_skipped_with_warning(tmp_path):
    bad = tmp_path / "broken.png"
    bad.write_bytes(b"not an image")
    good_listing = json.loads(make_images(tmp_path, count=1).read_text())
    listing = tmp_path / "mixed.json"
    listing.write_text(json.dumps([{"path": str(bad)}] + good_listing))
    with pytest.warns(RuntimeWarning, match="skipping undecodable"):
        manifest = export(ExportSpec(pretrained=False, seed=1), listing, tmp_path / "out")
    assert len(json.loads(manifest.read_text())) == 1


def test_cli_prints_manifest(tmp_path):
    listing = make_images(tmp_path)
    runner = CliRunner()
    result = runner.invoke(export_cli, [
        "--images", str(listing), "--out", str(tmp_path / "out"), "--no-pretrained",
    ])
    assert result.exit_code == 0, result.output
    assert result.output.strip().endswith("manifest.json")


def test_bad_score_convention_rejected():
    with pytest.raises(ValueError):
        ExportSpec(score="softmax")


@pytest.mark.skipif(
    "MSRD_REAL_DATA" not in os.environ or MSRD_BIN is None,
    reason="directional check needs pretrained weights plus a local dataset "
    "(set MSRD_REAL_DATA to a directory containing images.json with boxes)",
)
def test_real_network_directional_check(tmp_path):
    """Fused beats conv5-only, and window 3 beats window 5 on conv5."""
    data = Path(os.environ["MSRD_REAL_DATA"])
    listing = data / "images.json"
    entries = json.loads(listing.read_text())
    assert len(entries) >= 100, "need at least 100 annotated validation images"
    manifest = export(ExportSpec(pretrained=True), listing, tmp_path / "out")

    def top1(extra):
        out = tmp_path / f"report_{abs(hash(tuple(extra)))}.json"
        subprocess.run(
            [MSRD_BIN, "eval", "--manifest", str(manifest), "--out", str(out), *extra],
            check=True, capture_output=True,
        )
        return json.loads(out.read_text())["top1_error"]

    fused = top1([])
    conv5_w3 = top1(["--layers", "conv5"])
    conv5_w5 = top1(["--layers", "conv5", "--window", "5"])
    print(f"[SECONDARY] fused {fused:.2f}% conv5/w3 {conv5_w3:.2f}% conv5/w5 {conv5_w5:.2f}%")
    assert fused < conv5_w3
    assert conv5_w3 < conv5_w5
