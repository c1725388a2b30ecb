"""Framework-independent malware image explainability toolkit.

Turns binaries into grayscale images, computes GradCAM/HiResCAM heatmaps
from exported feature/gradient stacks, aggregates them per class, measures
model agreement with SSIM, and emits mask-filtered datasets.
"""

from ._util import MalvisError
from .aggregate import (
    CumulativeHeatmap,
    SsimReport,
    cumulative_heatmap,
    model_self_ssim,
    pairwise_cumulative_ssim,
    ssim,
)
from .cam import finalize_heatmap, gradcam_raw, hirescam_raw, upsample_heatmap
from .imagegen import bytes_to_image, entropy_profile, image_to_bytes, resize_image
from .manifest import DatasetManifest, ManifestEntry, read_manifest, split_manifest, write_manifest
from .masking import apply_mask, fuse_masks, mask_dataset, upsample_mask
from .metrics import classification_metrics, confusion_matrix
from .refnet import RefNet, refnet_feature_gradients, refnet_forward, refnet_init
from .tensorio import read_heatmap, read_tensor, write_heatmap, write_tensor

__version__ = "0.1.0"

__all__ = [
    "MalvisError",
    "CumulativeHeatmap",
    "SsimReport",
    "cumulative_heatmap",
    "model_self_ssim",
    "pairwise_cumulative_ssim",
    "ssim",
    "finalize_heatmap",
    "gradcam_raw",
    "hirescam_raw",
    "upsample_heatmap",
    "bytes_to_image",
    "entropy_profile",
    "image_to_bytes",
    "resize_image",
    "DatasetManifest",
    "ManifestEntry",
    "read_manifest",
    "split_manifest",
    "write_manifest",
    "apply_mask",
    "fuse_masks",
    "mask_dataset",
    "upsample_mask",
    "classification_metrics",
    "confusion_matrix",
    "RefNet",
    "refnet_feature_gradients",
    "refnet_forward",
    "refnet_init",
    "read_heatmap",
    "read_tensor",
    "write_heatmap",
    "write_tensor",
]
