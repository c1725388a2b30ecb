"""Dataset manifests (JSON Lines) and deterministic stratified splitting.

One JSON object per line: {"id": ..., "path": ..., "label": ..., "split": ...}.
Paths are relative (to the manifest's directory by convention), ids unique,
split one of train/val/test.

Splitting is stratified per class: floor(class_size * (1 - train_frac))
samples go to test, then floor(pool * val_frac) of the remaining pool to
val, remainder to train. With the 0.7/0.1 defaults a 100-sample class
lands at 63/7/30. Classes are processed in lexicographic order and
shuffled with a seeded generator, so the assignment is reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ._util import MalvisError

SPLITS = ("train", "val", "test")
DEFAULT_TRAIN_FRAC = 0.7
DEFAULT_VAL_FRAC = 0.1
DEFAULT_SEED = 42


@dataclass
class ManifestEntry:
    id: str
    path: str
    label: str
    split: str = "train"


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry] = field(default_factory=list)
    path: str | None = None  # where this manifest was loaded from, if anywhere

    def validate(self) -> "DatasetManifest":
        seen: set[str] = set()
        for e in self.entries:
            if not e.id:
                raise MalvisError("manifest entry with empty id")
            if e.id in seen:
                raise MalvisError(f"duplicate manifest id: {e.id}")
            seen.add(e.id)
            if not e.path:
                raise MalvisError(f"entry {e.id}: empty path")
            if not e.label:
                raise MalvisError(f"entry {e.id}: empty class label")
            if e.split not in SPLITS:
                raise MalvisError(f"entry {e.id}: split must be one of {SPLITS}, got {e.split!r}")
        return self

    def labels(self) -> list[str]:
        return sorted({e.label for e in self.entries})


def read_manifest(path) -> DatasetManifest:
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalvisError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                entries.append(
                    ManifestEntry(
                        id=str(obj["id"]),
                        path=str(obj["path"]),
                        label=str(obj["label"]),
                        split=str(obj.get("split", "train")),
                    )
                )
            except KeyError as exc:
                raise MalvisError(f"{path}:{lineno}: missing field {exc}") from exc
    return DatasetManifest(entries=entries, path=str(path)).validate()


def write_manifest(manifest: DatasetManifest, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in manifest.entries:
            fh.write(json.dumps({"id": e.id, "path": e.path, "label": e.label, "split": e.split}) + "\n")


def scan_tree(root, pattern: str = "*.png") -> DatasetManifest:
    """Build a manifest from a <root>/<class>/<file> directory tree."""
    root = Path(root)
    entries = []
    for class_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for f in sorted(class_dir.glob(pattern)):
            entries.append(
                ManifestEntry(id=f"{class_dir.name}/{f.stem}", path=str(f.relative_to(root)), label=class_dir.name)
            )
    return DatasetManifest(entries=entries).validate()


def split_manifest(
    manifest: DatasetManifest,
    train_frac: float = DEFAULT_TRAIN_FRAC,
    val_frac_of_train: float = DEFAULT_VAL_FRAC,
    seed: int = DEFAULT_SEED,
    warn=None,
) -> DatasetManifest:
    """Reassign splits, stratified per class; deterministic for a given seed."""
    if not 0.0 < train_frac < 1.0:
        raise MalvisError(f"train fraction must be in (0, 1), got {train_frac}")
    if not 0.0 < val_frac_of_train < 1.0:
        raise MalvisError(f"val fraction must be in (0, 1), got {val_frac_of_train}")
    manifest.validate()

    by_class: dict[str, list[int]] = {}
    for idx, e in enumerate(manifest.entries):
        by_class.setdefault(e.label, []).append(idx)

    rng = np.random.default_rng(seed)
    assignment = ["train"] * len(manifest.entries)
    for label in sorted(by_class):
        idxs = np.array(by_class[label])
        if len(idxs) < 2:
            if warn is not None:
                warn(f"class {label!r} has fewer than 2 samples; assigning to train")
            continue
        rng.shuffle(idxs)
        # epsilon guards floor against float dust (e.g. 100 * 0.3 -> 30.000000000000004)
        n_test = math.floor(len(idxs) * (1.0 - train_frac) + 1e-9)
        pool = len(idxs) - n_test
        n_val = math.floor(pool * val_frac_of_train + 1e-9)
        for i in idxs[:n_test]:
            assignment[i] = "test"
        for i in idxs[n_test : n_test + n_val]:
            assignment[i] = "val"

    entries = [replace(e, split=assignment[i]) for i, e in enumerate(manifest.entries)]
    return DatasetManifest(entries=entries, path=manifest.path)
