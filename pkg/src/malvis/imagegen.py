"""Binary-to-image conversion, image resizing and byte-entropy profiling.

A binary becomes a grayscale image by writing one byte per pixel, row by row,
at a fixed width; the trailing partial row is zero-padded so the byte stream
survives a round trip. When no width is given it is picked from the file size:

      < 10 KB -> 32       60-100 KB -> 256      500-1000 KB -> 768
    10-30 KB -> 64       100-200 KB -> 384      >= 1 MB     -> 1024
    30-60 KB -> 128      200-500 KB -> 512
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from ._interp import bilinear_resize
from ._util import MalvisError

# (max file size exclusive, width); the last row is the >= 1 MB bucket
WIDTH_TABLE = (
    (10 * 1024, 32),
    (30 * 1024, 64),
    (60 * 1024, 128),
    (100 * 1024, 256),
    (200 * 1024, 384),
    (500 * 1024, 512),
    (1024 * 1024, 768),
)
MAX_WIDTH = 1024

DEFAULT_WINDOW = 256
DEFAULT_STRIDE = 256


def default_width(file_len: int) -> int:
    """Image width for a file of `file_len` bytes, from the size table above."""
    for limit, width in WIDTH_TABLE:
        if file_len < limit:
            return width
    return MAX_WIDTH


def bytes_to_image(data: bytes, width: int | None = None) -> np.ndarray:
    """Convert a byte sequence to a uint8 (height, width) grayscale raster.

    Pixel i equals byte i in row-major order; the final partial row is
    zero-padded. Height is ceil(len(data) / width).
    """
    if len(data) == 0:
        raise MalvisError("empty binary")
    if width is None:
        width = default_width(len(data))
    if width <= 0:
        raise MalvisError(f"width must be positive, got {width}")
    height = math.ceil(len(data) / width)
    buf = np.zeros(height * width, dtype=np.uint8)
    buf[: len(data)] = np.frombuffer(data, dtype=np.uint8)
    return buf.reshape(height, width)


def image_to_bytes(img: np.ndarray, length: int | None = None) -> bytes:
    """Row-major pixel readback, truncated to `length` (inverse of bytes_to_image)."""
    flat = np.ascontiguousarray(img, dtype=np.uint8).reshape(-1)
    data = flat.tobytes()
    return data if length is None else data[:length]


def resize_image(img: np.ndarray, target_w: int, target_h: int) -> np.ndarray:
    """Bilinear resize with half-pixel centers; rounds half up, clamps to [0, 255]."""
    out = bilinear_resize(np.asarray(img, dtype=np.float64), target_h, target_w)
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


@dataclass
class EntropyProfile:
    """Sliding-window Shannon entropies (bits per byte) over a binary."""

    window: int
    stride: int
    values: np.ndarray = field(default_factory=lambda: np.empty(0))

    def offsets(self) -> np.ndarray:
        return np.arange(len(self.values), dtype=np.int64) * self.stride


def entropy_profile(data: bytes, window: int = DEFAULT_WINDOW, stride: int = DEFAULT_STRIDE) -> EntropyProfile:
    """Shannon entropy (base 2) of the byte histogram in each window.

    Window k covers data[k*stride : k*stride + window]; a window larger than
    the data yields an empty profile.
    """
    if window < 1:
        raise MalvisError(f"window must be >= 1, got {window}")
    if stride < 1:
        raise MalvisError(f"stride must be >= 1, got {stride}")
    if window > len(data):
        return EntropyProfile(window, stride, np.empty(0, dtype=np.float64))
    count = (len(data) - window) // stride + 1
    arr = np.frombuffer(data, dtype=np.uint8)
    values = np.empty(count, dtype=np.float64)
    for k in range(count):
        chunk = arr[k * stride : k * stride + window]
        hist = np.bincount(chunk, minlength=256)
        p = hist[hist > 0] / float(window)
        values[k] = float(-(p * np.log2(p)).sum())
    return EntropyProfile(window, stride, values)


def save_png(img: np.ndarray, path) -> None:
    """Persist a uint8 raster as an 8-bit grayscale PNG."""
    Image.fromarray(np.ascontiguousarray(img, dtype=np.uint8), mode="L").save(path, format="PNG")


def load_png(path) -> np.ndarray:
    """Load a PNG as a uint8 grayscale (height, width) array."""
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8)


def save_entropy_csv(profile: EntropyProfile, path) -> None:
    """Write `offset,entropy` CSV, offsets in bytes, entropy to 6 decimal places."""
    lines = ["offset,entropy"]
    for off, val in zip(profile.offsets(), profile.values):
        lines.append(f"{int(off)},{val:.6f}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
