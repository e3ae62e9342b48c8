"""Exports per-layer activations and class-score gradients from a
pretrained convolutional classifier into the MSRD tensor container and
manifest consumed by the msrd toolkit."""

from .container import write_tensor
from .export import ExportSpec, export

__all__ = ["ExportSpec", "export", "write_tensor"]
