"""Threshold-and-OR mask fusion, mask application, and masked-dataset emission.

A class mask keeps a pixel (bit 1) wherever either of two cumulative
heatmaps reaches the threshold (boundary inclusive: a value exactly at the
threshold is kept, so threshold 0 keeps everything). Masks are fused at
native heatmap resolution and upsampled nearest-neighbor so they stay
exactly binary; concealed pixels are blacked out.

Masked datasets are written with the same relative layout as the source
manifest and identical ids, labels and split assignments. Every sample,
including val/test ones, is masked with its ground-truth class's mask;
for held-out splits that leaks label information into the inputs, so
`mask_dataset` warns whenever it touches a non-train split.
"""

from __future__ import annotations

import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from PIL import Image

from ._interp import nearest_resize
from ._util import MalvisError, worker_count
from .cam import check_heatmap
from .manifest import DatasetManifest, ManifestEntry

DEFAULT_THRESHOLD = 0.3

LEAKAGE_WARNING = (
    "warning: non-train samples are masked with their ground-truth class mask; "
    "this leaks label information into val/test inputs"
)


def fuse_masks(hm_a: np.ndarray, hm_b: np.ndarray, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """Binary keep/conceal mask: 1 where either heatmap >= threshold."""
    a = check_heatmap(hm_a)
    b = check_heatmap(hm_b)
    if a.shape != b.shape:
        raise MalvisError(f"heatmap dimension mismatch: {a.shape} vs {b.shape}")
    if not 0.0 <= threshold <= 1.0:
        raise MalvisError(f"threshold must be in [0, 1], got {threshold}")
    return ((a >= threshold) | (b >= threshold)).astype(np.uint8)


def upsample_mask(mask: np.ndarray, target_w: int, target_h: int) -> np.ndarray:
    """Nearest-neighbor upsample; output stays strictly 0/1."""
    return nearest_resize(check_mask(mask), target_h, target_w)


def apply_mask(img: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Keep pixels where the mask bit is 1, black out the rest."""
    img = np.asarray(img, dtype=np.uint8)
    m = check_mask(mask)
    if img.shape != m.shape:
        raise MalvisError(f"image/mask dimension mismatch: {img.shape} vs {m.shape}")
    return (img * m).astype(np.uint8)


def check_mask(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise MalvisError(f"wrong rank: expected 2, got {mask.ndim}")
    if not np.isin(mask, (0, 1)).all():
        raise MalvisError("mask bits must be 0 or 1")
    return mask.astype(np.uint8)


def save_mask_png(mask: np.ndarray, path, class_label: str | None = None,
                  threshold: float | None = None, source_models: list[str] | None = None) -> None:
    """Persist a mask as 1-bit PNG plus a JSON sidecar (same stem, .json)."""
    m = check_mask(mask)
    Image.fromarray(m.astype(bool)).save(path, format="PNG")
    sidecar = {
        "class": class_label,
        "threshold": threshold,
        "sourceModels": source_models or [],
    }
    Path(path).with_suffix(".json").write_text(json.dumps(sidecar, indent=2) + "\n", encoding="utf-8")


def load_mask_png(path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.uint8)
    bits = (arr > 0).astype(np.uint8)
    return bits


def mask_dataset(manifest: DatasetManifest, masks: dict[str, np.ndarray], out_dir,
                 base_dir=None, warn_stream=None) -> DatasetManifest:
    """Mask every sample with its class's mask and mirror the layout under out_dir.

    Sample paths are resolved against base_dir (defaults to the manifest's
    own directory). Masks not matching an image's size are upsampled
    nearest-neighbor first. Returns the new manifest, in input order.
    """
    missing = sorted({e.label for e in manifest.entries} - set(masks))
    if missing:
        raise MalvisError(f"missing mask for class(es): {', '.join(missing)}")
    for label in masks:
        check_mask(masks[label])

    root = Path(base_dir) if base_dir is not None else (
        Path(manifest.path).parent if manifest.path else Path(".")
    )
    out_root = Path(out_dir)
    out_root.mkdir(parents=True, exist_ok=True)

    if any(e.split != "train" for e in manifest.entries):
        print(LEAKAGE_WARNING, file=warn_stream if warn_stream is not None else sys.stderr)

    def _one(entry: ManifestEntry) -> ManifestEntry:
        src = root / entry.path
        if not src.is_file():
            raise MalvisError(f"sample not found: {src}")
        with Image.open(src) as im:
            img = np.asarray(im.convert("L"), dtype=np.uint8)
        mask = masks[entry.label]
        if mask.shape != img.shape:
            mask = upsample_mask(mask, img.shape[1], img.shape[0])
        dst = out_root / entry.path
        dst.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(apply_mask(img, mask), mode="L").save(dst, format="PNG")
        return ManifestEntry(id=entry.id, path=entry.path, label=entry.label, split=entry.split)

    if not manifest.entries:
        return DatasetManifest(entries=[])
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        new_entries = list(pool.map(_one, manifest.entries))
    return DatasetManifest(entries=new_entries)
