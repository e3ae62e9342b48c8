"""Multi-scale discriminative region discovery for weakly-supervised
object localization: local-maxima channel weighting of gradient weight
maps, multi-scale localization-map fusion, box extraction and metrics."""

from .boxes import SegmentationConfig, boxes_from_map, connected_components, threshold_mask
from .discovery import DiscoveryConfig, LocalMaxima, brute_force_maxima, channel_weights, find_local_maxima
from .evaluation import EvalRecord, EvalSummary, aggregate, iou, topk_localization, voc_loc
from .grad_weights import GradientWeightMap, alpha_maps, rectified_alpha_weights, global_average_weights, rectified_gradients
from .localization import (
    LocalizationMap,
    binarize_for_explanation,
    fuse,
    fuse_maps,
    layer_locmap,
    normalize01,
    upsample_bilinear,
    upsample_nearest,
)
from .manifest import BoundingBox, SampleManifest, SchemaError, read_manifest, write_manifest
from .pipeline import RunConfig, run_boxes, run_eval, run_fuse, run_heatmap, run_locmap
from .synth import SynthSpec, generate
from .tensor_io import (
    FormatError,
    TruncationError,
    ValidationError,
    read_tensor,
    read_tensor_header,
    write_tensor,
)

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "DiscoveryConfig",
    "EvalRecord",
    "EvalSummary",
    "FormatError",
    "GradientWeightMap",
    "LocalMaxima",
    "LocalizationMap",
    "RunConfig",
    "SampleManifest",
    "SchemaError",
    "SegmentationConfig",
    "SynthSpec",
    "TruncationError",
    "ValidationError",
    "aggregate",
    "alpha_maps",
    "binarize_for_explanation",
    "boxes_from_map",
    "brute_force_maxima",
    "channel_weights",
    "connected_components",
    "rectified_alpha_weights",
    "find_local_maxima",
    "fuse",
    "fuse_maps",
    "generate",
    "global_average_weights",
    "iou",
    "layer_locmap",
    "normalize01",
    "read_manifest",
    "read_tensor",
    "read_tensor_header",
    "rectified_gradients",
    "run_boxes",
    "run_eval",
    "run_fuse",
    "run_heatmap",
    "run_locmap",
    "threshold_mask",
    "topk_localization",
    "upsample_bilinear",
    "upsample_nearest",
    "voc_loc",
    "write_manifest",
    "write_tensor",
]
