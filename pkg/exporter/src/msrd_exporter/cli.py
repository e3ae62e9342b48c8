"""Command-line exporter: msrd-export --model vgg16 --images list.json --out dir."""

from __future__ import annotations

import click

from .export import SCORE_CONVENTIONS, ExportSpec, export


@click.command()
@click.option("--model", default="vgg16", show_default=True, help="torchvision model identifier.")
@click.option("--images", required=True, help="JSON list of {path, label, boxes} entries.")
@click.option("--layers", default="conv4,conv5", show_default=True, help="Comma-separated layers to hook.")
@click.option("--out", required=True, help="Output directory for tensors + manifest.")
@click.option("--score", default="exp_logit", show_default=True, type=click.Choice(SCORE_CONVENTIONS),
              help="Backpropagated class score convention.")
@click.option("--pretrained/--no-pretrained", default=True, show_default=True)
@click.option("--seed", default=0, show_default=True, help="Weight seed when not pretrained.")
def main(model, images, layers, out, score, pretrained, seed):
    """Capture per-layer activations and class-score gradients."""
    spec = ExportSpec(
        model=model,
        layers=tuple(name for name in layers.split(",") if name),
        score=score,
        pretrained=pretrained,
        seed=seed,
    )
    try:
        manifest = export(spec, images, out)
    except (KeyError, ValueError, OSError) as exc:
        raise click.ClickException(str(exc))
    click.echo(str(manifest))


if __name__ == "__main__":
    main()
