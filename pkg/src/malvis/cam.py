"""GradCAM and HiResCAM attention maps from feature-map and gradient stacks.

Both take the activations A (F maps of D1 x D2) of a convolutional layer and
the gradients dS/dA of one class score with respect to those activations:

  * GradCAM weighs each map by the global average of its gradient
    (alpha_f = mean over positions of grad_f) and sums alpha_f * A_f.
  * HiResCAM skips the pooling and sums grad_f * A_f element-wise, keeping
    per-position sign and scale.

Raw maps are unrectified; `finalize_heatmap` applies ReLU then min-max
normalization to produce a displayable heatmap in [0, 1]. Inputs are float32
stacks; reductions accumulate in float64 with a fixed order (map index outer,
then rows, then columns).
"""

from __future__ import annotations

import numpy as np

from ._interp import bilinear_resize
from ._util import MalvisError


def _check_pair(features: np.ndarray, gradients: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    features = np.asarray(features)
    gradients = np.asarray(gradients)
    if features.ndim != 3 or gradients.ndim != 3:
        raise MalvisError(f"wrong rank: expected 3, got {features.ndim} and {gradients.ndim}")
    if features.shape != gradients.shape:
        raise MalvisError(f"stack shape mismatch: features {features.shape} vs gradients {gradients.shape}")
    if not (np.isfinite(features).all() and np.isfinite(gradients).all()):
        raise MalvisError("stack contains non-finite values")
    return features.astype(np.float64), gradients.astype(np.float64)


def gradcam_raw(features: np.ndarray, gradients: np.ndarray) -> np.ndarray:
    """Unrectified GradCAM map: sum_f (mean of grad_f) * A_f."""
    feats, grads = _check_pair(features, gradients)
    f, d1, d2 = feats.shape
    alphas = grads.reshape(f, -1).sum(axis=1) / float(d1 * d2)
    return np.tensordot(alphas, feats, axes=1)


def hirescam_raw(features: np.ndarray, gradients: np.ndarray) -> np.ndarray:
    """Unrectified HiResCAM map: sum_f grad_f * A_f element-wise."""
    feats, grads = _check_pair(features, gradients)
    return (grads * feats).sum(axis=0)


def finalize_heatmap(raw: np.ndarray) -> np.ndarray:
    """ReLU then min-max normalize a raw map into [0, 1].

    A constant post-ReLU map has no range to stretch and becomes all zeros.
    Idempotent on its own outputs.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if not np.isfinite(raw).all():
        raise MalvisError("raw map contains non-finite values")
    rect = np.maximum(raw, 0.0)
    lo = rect.min()
    hi = rect.max()
    if hi == lo:
        return np.zeros_like(rect)
    return (rect - lo) / (hi - lo)


def upsample_heatmap(hm: np.ndarray, target_w: int, target_h: int) -> np.ndarray:
    """Bilinear upsample with half-pixel centers, clamped to [0, 1]."""
    out = bilinear_resize(np.asarray(hm, dtype=np.float64), target_h, target_w)
    return np.clip(out, 0.0, 1.0)


def check_heatmap(hm: np.ndarray, normalized: bool = False) -> np.ndarray:
    """Validate heatmap bounds; with normalized=True also require max == 1 unless all-zero."""
    hm = np.asarray(hm, dtype=np.float64)
    if hm.ndim != 2:
        raise MalvisError(f"wrong rank: expected 2, got {hm.ndim}")
    if not np.isfinite(hm).all():
        raise MalvisError("heatmap contains non-finite values")
    if hm.min() < 0.0 or hm.max() > 1.0:
        raise MalvisError("heatmap values outside [0, 1]")
    if normalized and hm.max() not in (0.0, 1.0):
        raise MalvisError(f"heatmap not min-max normalized: max is {hm.max()}")
    return hm


def heatmap_to_pixels(hm: np.ndarray) -> np.ndarray:
    """Scale a [0, 1] heatmap to uint8 0-255 for PNG display."""
    hm = check_heatmap(hm)
    return np.clip(np.floor(hm * 255.0 + 0.5), 0, 255).astype(np.uint8)
