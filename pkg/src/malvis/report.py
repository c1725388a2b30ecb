"""Matplotlib figure rendering for the CLI report paths.

Each helper writes one PNG figure next to the delimited output it
illustrates: entropy profiles as offset/entropy curves, heatmaps as
standalone maps or overlays on the source image, SSIM reports as per-class
bars, confusion matrices as annotated grids.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .aggregate import SsimReport
from .cam import upsample_heatmap
from .imagegen import EntropyProfile


def save_entropy_figure(profile: EntropyProfile, path, title: str | None = None) -> None:
    fig, ax = plt.subplots(figsize=(10, 3.2))
    ax.plot(profile.offsets(), profile.values, lw=1.0, color="#1f5fa6")
    ax.set_xlabel("offset (bytes)")
    ax.set_ylabel("entropy (bits)")
    ax.set_ylim(-0.2, 8.2)
    ax.axhline(8.0, color="#999999", lw=0.6, ls="--")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def save_heatmap_figure(hm: np.ndarray, path, image: np.ndarray | None = None,
                        alpha: float = 0.45, title: str | None = None) -> None:
    """Heatmap with a colorbar, optionally overlaid on its grayscale source image."""
    fig, ax = plt.subplots(figsize=(5, 5))
    if image is not None:
        h, w = image.shape
        ax.imshow(image, cmap="gray", vmin=0, vmax=255)
        overlay = hm if hm.shape == image.shape else upsample_heatmap(hm, w, h)
        im = ax.imshow(overlay, cmap="jet", vmin=0.0, vmax=1.0, alpha=alpha)
    else:
        im = ax.imshow(hm, cmap="jet", vmin=0.0, vmax=1.0)
    fig.colorbar(im, ax=ax, fraction=0.046)
    ax.set_xticks([])
    ax.set_yticks([])
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def save_ssim_figure(report: SsimReport, path, title: str | None = None) -> None:
    labels = sorted(report.per_class)
    values = [report.per_class[k] for k in labels]
    fig, ax = plt.subplots(figsize=(7, max(2.0, 0.4 * len(labels) + 1.2)))
    ax.barh(labels, values, color="#1f5fa6")
    ax.axvline(report.mean, color="#c44e52", lw=1.2, ls="--", label=f"mean {report.mean:.3f}")
    ax.set_xlabel("SSIM")
    ax.set_xlim(min(0.0, min(values) - 0.05), 1.05)
    ax.legend(loc="lower right")
    if title:
        ax.set_title(title)
    ax.grid(axis="x", alpha=0.3)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def save_confusion_figure(cm: np.ndarray, class_labels: list[str], path,
                          title: str | None = None) -> None:
    cm = np.asarray(cm)
    fig, ax = plt.subplots(figsize=(max(3.5, 0.6 * len(class_labels) + 2),) * 2)
    im = ax.imshow(cm, cmap="Blues")
    ax.set_xticks(range(len(class_labels)), class_labels, rotation=45, ha="right")
    ax.set_yticks(range(len(class_labels)), class_labels)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    thresh = cm.max() / 2 if cm.max() else 0.5
    for i in range(cm.shape[0]):
        for j in range(cm.shape[1]):
            ax.text(j, i, str(int(cm[i, j])), ha="center", va="center",
                    color="white" if cm[i, j] > thresh else "black", fontsize=8)
    fig.colorbar(im, ax=ax, fraction=0.046)
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
