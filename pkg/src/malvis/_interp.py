"""2-D resampling kernels shared by image resizing, heatmap upsampling and masks.

Both samplers use half-pixel centers: output pixel (i, j) is sampled at source
coordinate ((i + 0.5) * srcH / dstH - 0.5, (j + 0.5) * srcW / dstW - 0.5), with
edge clamping. Resizing to the source's own size is an exact identity.
"""

from __future__ import annotations

import numpy as np

from ._util import MalvisError


def _check_target(out_h: int, out_w: int) -> None:
    if out_h <= 0 or out_w <= 0:
        raise MalvisError(f"target dimensions must be positive, got {out_w}x{out_h}")


def bilinear_resize(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resample of a 2-D float array; returns float64 of shape (out_h, out_w)."""
    _check_target(out_h, out_w)
    src = np.asarray(src, dtype=np.float64)
    in_h, in_w = src.shape

    # evaluation order (multiply, then divide) is pinned for bit-stable goldens
    ys = (np.arange(out_h) + 0.5) * in_h / out_h - 0.5
    xs = (np.arange(out_w) + 0.5) * in_w / out_w - 0.5
    y0 = np.floor(ys)
    x0 = np.floor(xs)
    fy = ys - y0
    fx = xs - x0
    y0c = np.clip(y0.astype(np.int64), 0, in_h - 1)
    y1c = np.clip(y0.astype(np.int64) + 1, 0, in_h - 1)
    x0c = np.clip(x0.astype(np.int64), 0, in_w - 1)
    x1c = np.clip(x0.astype(np.int64) + 1, 0, in_w - 1)

    top = src[y0c][:, x0c] * (1 - fx) + src[y0c][:, x1c] * fx
    bot = src[y1c][:, x0c] * (1 - fx) + src[y1c][:, x1c] * fx
    return top * (1 - fy)[:, None] + bot * fy[:, None]


def nearest_resize(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Nearest-neighbor resample (value-preserving, keeps binary arrays binary)."""
    _check_target(out_h, out_w)
    src = np.asarray(src)
    in_h, in_w = src.shape
    rows = np.clip(np.floor((np.arange(out_h) + 0.5) * in_h / out_h).astype(np.int64), 0, in_h - 1)
    cols = np.clip(np.floor((np.arange(out_w) + 0.5) * in_w / out_w).astype(np.int64), 0, in_w - 1)
    return src[rows][:, cols].copy()
