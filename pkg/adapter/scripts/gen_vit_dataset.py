#!/usr/bin/env python3
"""Build the small synthetic dataset for the ViT masking experiments.

Three families of 1024-byte binaries, each with a family-specific textured
band (a tenth to a third of the bytes) and heavy random filler elsewhere.
Converted with the toolkit at width 32 they become 32x32 images whose
discriminative region is the band; the filler is pure noise, so concealing
it is genuinely helpful. Emits images/<family>/*.png plus a stratified
split manifest at images/manifest.jsonl.
"""

import sys
from pathlib import Path

import numpy as np

from malvis.imagegen import bytes_to_image, save_png
from malvis.manifest import DatasetManifest, ManifestEntry, split_manifest, write_manifest

WIDTH = 32
SIZE = WIDTH * WIDTH
PER_CLASS = 24

# byte row band per family: (first row, last row exclusive, motif); bands are
# bright textured sections, the filler is dim random noise
FAMILIES = {
    "famA": (2, 12, bytes([0xFF, 0x30] * 16)),
    "famB": (12, 22, bytes([0xE0] * 8 + [0xFF] * 8) * 2),
    "famC": (22, 32, bytes(range(128, 256, 4)) * 1),
}


def build_blob(rng: np.random.Generator, first: int, last: int, motif: bytes) -> bytes:
    data = rng.integers(0, 256, size=SIZE, dtype=np.uint8)
    band = (motif * (WIDTH * (last - first) // len(motif) + 1))[: WIDTH * (last - first)]
    data[first * WIDTH : last * WIDTH] = np.frombuffer(band, dtype=np.uint8)
    return data.tobytes()


def main(out_root: Path) -> None:
    rng = np.random.default_rng(777)
    images = out_root / "images"
    entries = []
    for fam, (first, last, motif) in FAMILIES.items():
        (images / fam).mkdir(parents=True, exist_ok=True)
        for i in range(PER_CLASS):
            img = bytes_to_image(build_blob(rng, first, last, motif), width=WIDTH)
            save_png(img, images / fam / f"s{i}.png")
            entries.append(ManifestEntry(id=f"{fam}-{i}", path=f"{fam}/s{i}.png", label=fam))
    manifest = split_manifest(DatasetManifest(entries=entries), 0.7, 0.1, seed=42)
    write_manifest(manifest, images / "manifest.jsonl")
    counts = {s: sum(1 for e in manifest.entries if e.split == s) for s in ("train", "val", "test")}
    print(f"dataset written under {images} (train {counts['train']} / val {counts['val']} / test {counts['test']})")


if __name__ == "__main__":
    main(Path(sys.argv[1] if len(sys.argv) > 1 else "fixtures/vit"))
