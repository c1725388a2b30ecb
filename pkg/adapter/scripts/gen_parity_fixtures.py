#!/usr/bin/env python3
"""Generate reference-network parity fixtures for the adapter tests.

For each head kind: serialize a reference net, emit random input images as
PNG, and record the native feature stacks, gradient target classes and
finalized GradCAM/HiResCAM heatmaps the adapter must reproduce.
"""

import json
import sys
from pathlib import Path

import numpy as np

from malvis.cam import finalize_heatmap, gradcam_raw, hirescam_raw
from malvis.imagegen import save_png
from malvis.refnet import refnet_feature_gradients, refnet_forward, refnet_init, save_refnet
from malvis.tensorio import write_heatmap, write_tensor

INPUT_SIZE = 32
CLASSES = 3
SAMPLES = 6


def main(out_root: Path) -> None:
    rng = np.random.default_rng(2024)
    for head_kind in ("gap-linear", "flatten-linear"):
        head_dir = out_root / head_kind
        head_dir.mkdir(parents=True, exist_ok=True)
        net = refnet_init(4242, head_kind, INPUT_SIZE, CLASSES)
        save_refnet(net, head_dir / "weights")
        listing = []
        for i in range(SAMPLES):
            img = rng.integers(0, 256, size=(INPUT_SIZE, INPUT_SIZE), dtype=np.uint8)
            save_png(img, head_dir / f"img{i}.png")
            scores, feats = refnet_forward(net, img)
            target = int(np.argmax(scores))
            grads = refnet_feature_gradients(net, feats, target)
            write_tensor(feats, head_dir / f"img{i}_features.npy")
            write_tensor(grads, head_dir / f"img{i}_gradients.npy")
            write_heatmap(finalize_heatmap(gradcam_raw(feats, grads)), head_dir / f"img{i}_gradcam.npy")
            write_heatmap(finalize_heatmap(hirescam_raw(feats, grads)), head_dir / f"img{i}_hirescam.npy")
            listing.append(
                {
                    "image": f"img{i}.png",
                    "target_class": target,
                    "scores": [float(s) for s in scores],
                    "features": f"img{i}_features.npy",
                    "gradients": f"img{i}_gradients.npy",
                    "gradcam": f"img{i}_gradcam.npy",
                    "hirescam": f"img{i}_hirescam.npy",
                }
            )
        (head_dir / "listing.json").write_text(json.dumps(listing, indent=2) + "\n", encoding="utf-8")
    print(f"parity fixtures written under {out_root}")


if __name__ == "__main__":
    main(Path(sys.argv[1] if len(sys.argv) > 1 else "fixtures/parity"))
