"""Command-line client for the pipeline service.

Each subcommand posts one request to the service API.  Without ``--server``
the client talks to an in-process app over an ASGI transport, so the CLI
works standalone; with ``--server`` (or MSRD_SERVER) it targets a running
``uvicorn msrd.service:app`` instance and paths are resolved server-side.

Exit codes: 0 success, 1 runtime/data error, 2 usage error.
"""

from __future__ import annotations

import asyncio

import click
import httpx

from .evaluation import EvalSummary, report_text


def _post(server: str | None, endpoint: str, payload: dict) -> dict:
    async def go() -> httpx.Response:
        if server:
            client = httpx.AsyncClient(base_url=server, timeout=None)
        else:
            from .service import create_app

            transport = httpx.ASGITransport(app=create_app())
            client = httpx.AsyncClient(transport=transport, base_url="http://msrd.internal", timeout=None)
        async with client:
            return await client.post(endpoint, json=payload)

    try:
        response = asyncio.run(go())
    except httpx.HTTPError as exc:
        raise click.ClickException(f"cannot reach service: {exc}")
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        raise click.ClickException(str(detail))
    return response.json()


def _odd_window(ctx, param, value):
    if value < 1 or value % 2 == 0:
        raise click.BadParameter("must be a positive odd integer")
    return value


def _at_least_one(ctx, param, value):
    if value < 1:
        raise click.BadParameter("must be >= 1")
    return value


def _nonnegative(ctx, param, value):
    if value < 0:
        raise click.BadParameter("must be >= 0")
    return value


def _unit_interval(ctx, param, value):
    if not 0.0 <= value < 1.0:
        raise click.BadParameter("must be in [0, 1)")
    return value


def _pipeline_options(fn):
    for option in reversed(
        (
            click.option("--manifest", required=True, help="Path to manifest.json."),
            click.option("--layers", default="conv4,conv5", show_default=True,
                         help="Comma-separated layer names to use."),
            click.option("--window", default=3, show_default=True, callback=_odd_window,
                         help="Maximum-filter window size."),
            click.option("--stride", default=1, show_default=True, callback=_at_least_one,
                         help="Sliding-window stride."),
            click.option("--min-grad", default=0.0, show_default=True, callback=_nonnegative,
                         help="Threshold a local maximum must exceed."),
            click.option("--fuse-raw", is_flag=True, help="Sum maps without per-map normalization."),
            click.option("--workers", default=1, show_default=True, callback=_at_least_one,
                         help="Worker threads over images."),
        )
    ):
        fn = option(fn)
    return fn


def _common_payload(manifest, layers, window, stride, min_grad, fuse_raw, workers) -> dict:
    return {
        "manifest": manifest,
        "layers": [name for name in layers.split(",") if name],
        "window": window,
        "stride": stride,
        "min_grad": min_grad,
        "fuse_raw": fuse_raw,
        "workers": workers,
    }


@click.group()
@click.option("--server", envvar="MSRD_SERVER", default=None,
              help="Base URL of a running service; defaults to in-process.")
@click.pass_context
def main(ctx, server):
    """Multi-scale discriminative region discovery toolkit."""
    ctx.obj = server


@main.command()
@click.option("--out", required=True, help="Output directory for tensors and manifest.")
@click.option("--images", default=8, show_default=True, callback=_at_least_one)
@click.option("--seed", default=0, show_default=True)
@click.option("--channels", default=8, show_default=True, callback=_at_least_one)
@click.option("--min-scale", default=0.05, show_default=True)
@click.option("--max-scale", default=0.5, show_default=True)
@click.option("--noise", default=0.02, show_default=True, callback=_nonnegative)
@click.pass_obj
def synth(server, out, images, seed, channels, min_scale, max_scale, noise):
    """Generate synthetic activation/gradient fixtures with ground truth."""
    result = _post(server, "/synth", {
        "out_dir": out,
        "images": images,
        "seed": seed,
        "channels": channels,
        "min_scale": min_scale,
        "max_scale": max_scale,
        "noise": noise,
    })
    click.echo(result["manifest"])


@main.command()
@_pipeline_options
@click.option("--out", required=True, help="Directory for map artifacts.")
@click.pass_obj
def locmap(server, manifest, layers, window, stride, min_grad, fuse_raw, workers, out):
    """Compute per-layer and fused localization maps."""
    payload = _common_payload(manifest, layers, window, stride, min_grad, fuse_raw, workers)
    payload["out_dir"] = out
    result = _post(server, "/locmap", payload)
    click.echo(f"{len(result['maps'])} image(s) -> {out}")


@main.command()
@click.option("--maps", "maps_dir", required=True, help="Directory of per-layer map artifacts.")
@click.option("--layers", default="conv4,conv5", show_default=True)
@click.option("--fuse-raw", is_flag=True)
@click.option("--out", required=True, help="Directory for fused maps.")
@click.pass_obj
def fuse(server, maps_dir, layers, fuse_raw, out):
    """Fuse previously written per-layer maps."""
    result = _post(server, "/fuse", {
        "maps_dir": maps_dir,
        "layers": [name for name in layers.split(",") if name],
        "fuse_raw": fuse_raw,
        "out_dir": out,
    })
    click.echo(f"{len(result['maps'])} fused map(s) -> {out}")


@main.command()
@_pipeline_options
@click.option("--maps", "maps_dir", default=None, help="Reuse maps from a locmap run.")
@click.option("--tau", default=0.2, show_default=True, callback=_unit_interval,
              help="Mask threshold as fraction of map max.")
@click.option("--mode", default="largest", show_default=True, type=click.Choice(["largest", "all"]))
@click.option("--out", default=None, help="Write boxes JSON here.")
@click.pass_obj
def boxes(server, manifest, layers, window, stride, min_grad, fuse_raw, workers, maps_dir, tau, mode, out):
    """Extract bounding boxes from the final localization map."""
    payload = _common_payload(manifest, layers, window, stride, min_grad, fuse_raw, workers)
    payload.update({"maps_dir": maps_dir, "tau": tau, "mode": mode, "out": out})
    result = _post(server, "/boxes", payload)
    for image_id in sorted(result["boxes"]):
        rects = [f"({b['x_min']},{b['y_min']},{b['x_max']},{b['y_max']})" for b in result["boxes"][image_id]]
        click.echo(f"{image_id}: {' '.join(rects) if rects else '-'}")


@main.command(name="eval")
@_pipeline_options
@click.option("--maps", "maps_dir", default=None, help="Reuse maps from a locmap run.")
@click.option("--tau", default=0.2, show_default=True, callback=_unit_interval)
@click.option("--mode", default="largest", show_default=True, type=click.Choice(["largest", "all"]))
@click.option("--delta", default=0.25, show_default=True, callback=_unit_interval,
              help="Mask threshold for the pixel-ratio metric.")
@click.option("--out", default=None, help="Write the JSON report here.")
@click.pass_obj
def eval_cmd(server, manifest, layers, window, stride, min_grad, fuse_raw, workers, maps_dir, tau, mode, delta, out):
    """Score localization against ground truth and print the report table."""
    payload = _common_payload(manifest, layers, window, stride, min_grad, fuse_raw, workers)
    payload.update({"maps_dir": maps_dir, "tau": tau, "mode": mode, "delta": delta, "out": out})
    report = _post(server, "/eval", payload)["report"]
    summary = EvalSummary(
        n_images=report["n_images"],
        top1_error=report["top1_error"],
        top5_error=report["top5_error"],
        mean_voc_loc=report["mean_voc_loc"],
        skipped=report["skipped"],
        meta=report["meta"],
    )
    click.echo(report_text(summary), nl=False)


@main.command()
@_pipeline_options
@click.option("--maps", "maps_dir", default=None, help="Reuse maps from a locmap run.")
@click.option("--out", required=True, help="Directory for PNG heatmaps.")
@click.pass_obj
def heatmap(server, manifest, layers, window, stride, min_grad, fuse_raw, workers, maps_dir, out):
    """Render the final normalized map as an 8-bit grayscale PNG per image."""
    payload = _common_payload(manifest, layers, window, stride, min_grad, fuse_raw, workers)
    payload.update({"maps_dir": maps_dir, "out_dir": out})
    result = _post(server, "/heatmap", payload)
    click.echo(f"{len(result['files'])} heatmap(s) -> {out}")


if __name__ == "__main__":
    main()
