"""Per-class cumulative heatmaps and SSIM-based model agreement scores.

A cumulative heatmap is the element-wise mean of all per-sample heatmaps of
one class, re-normalized so it remains a valid heatmap. SSIM between two
heatmaps is computed over a single window spanning the whole map (the native
maps are far smaller than the usual 11x11 sliding window), with population
variances and the standard stabilizers C1 = (0.01 * L)^2, C2 = (0.03 * L)^2
at dynamic range L = 1. An optional 11x11 sliding-window mean is available
for larger maps, but the single-window form is the canonical one.

Model-level scores:

  * pairwise cumulative SSIM: per-class SSIM between two models' cumulative
    maps, reported with both the mean and the sum across classes.
  * self SSIM: mean SSIM over all unordered class pairs of one model's own
    cumulative maps; lower means the model attends more distinctively per class.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import MalvisError
from .cam import check_heatmap, finalize_heatmap

SSIM_L = 1.0
SSIM_C1 = (0.01 * SSIM_L) ** 2
SSIM_C2 = (0.03 * SSIM_L) ** 2


@dataclass
class CumulativeHeatmap:
    class_label: str
    count: int
    map: np.ndarray


@dataclass
class SsimReport:
    per_class: dict[str, float]
    mean: float
    sum: float

    def to_json(self) -> str:
        """UTF-8 JSON with 6 decimal places, classes in lexicographic order."""
        classes = ", ".join(f'"{label}": {self.per_class[label]:.6f}' for label in sorted(self.per_class))
        return f'{{"classes": {{{classes}}}, "mean": {self.mean:.6f}, "sum": {self.sum:.6f}}}'


def cumulative_heatmap(class_label: str, heatmaps: list[np.ndarray]) -> CumulativeHeatmap:
    """Average heatmaps of one class element-wise, then re-normalize."""
    if len(heatmaps) == 0:
        raise MalvisError(f"no heatmaps to aggregate for class {class_label!r}")
    maps = [check_heatmap(hm) for hm in heatmaps]
    shape = maps[0].shape
    for hm in maps[1:]:
        if hm.shape != shape:
            raise MalvisError(f"mixed heatmap dimensions: {hm.shape} vs {shape}")
    mean = np.mean(np.stack(maps), axis=0)
    return CumulativeHeatmap(class_label=class_label, count=len(maps), map=finalize_heatmap(mean))


def _ssim_window(a: np.ndarray, b: np.ndarray) -> float:
    mu_a = a.mean()
    mu_b = b.mean()
    var_a = (a * a).mean() - mu_a * mu_a
    var_b = (b * b).mean() - mu_b * mu_b
    cov = (a * b).mean() - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float(num / den)


def ssim(a: np.ndarray, b: np.ndarray, window: int | None = None) -> float:
    """SSIM between two heatmaps of identical dimensions, in [-1, 1].

    Default is a single window over the whole map. Pass window=11 for the
    sliding-window mean variant; maps must then be at least window x window.
    """
    a = check_heatmap(a)
    b = check_heatmap(b)
    if a.shape != b.shape:
        raise MalvisError(f"heatmap dimension mismatch: {a.shape} vs {b.shape}")
    if window is None:
        return _ssim_window(a, b)
    h, w = a.shape
    if window < 2 or h < window or w < window:
        raise MalvisError(f"window {window} does not fit {w}x{h} maps")
    vals = [
        _ssim_window(a[i : i + window, j : j + window], b[i : i + window, j : j + window])
        for i in range(h - window + 1)
        for j in range(w - window + 1)
    ]
    return float(np.mean(vals))


def pairwise_cumulative_ssim(
    model_a: dict[str, CumulativeHeatmap], model_b: dict[str, CumulativeHeatmap]
) -> SsimReport:
    """Per-class SSIM between two models' cumulative heatmaps, with mean and sum."""
    if set(model_a) != set(model_b):
        only_a = sorted(set(model_a) - set(model_b))
        only_b = sorted(set(model_b) - set(model_a))
        raise MalvisError(f"class-set mismatch: only in first {only_a}, only in second {only_b}")
    if not model_a:
        raise MalvisError("no classes to compare")
    per_class = {label: ssim(model_a[label].map, model_b[label].map) for label in sorted(model_a)}
    values = list(per_class.values())
    return SsimReport(per_class=per_class, mean=float(np.mean(values)), sum=float(np.sum(values)))


def model_self_ssim(model: dict[str, CumulativeHeatmap]) -> float:
    """Mean SSIM over all unordered class pairs of one model's cumulative maps."""
    labels = sorted(model)
    if len(labels) < 2:
        raise MalvisError(f"self-SSIM needs at least 2 classes, got {len(labels)}")
    vals = [
        ssim(model[labels[i]].map, model[labels[j]].map)
        for i in range(len(labels))
        for j in range(i + 1, len(labels))
    ]
    return float(np.mean(vals))


def self_ssim_pairs(model: dict[str, CumulativeHeatmap]) -> dict[str, float]:
    """Per-pair SSIM values backing model_self_ssim, keyed "labelA|labelB"."""
    labels = sorted(model)
    if len(labels) < 2:
        raise MalvisError(f"self-SSIM needs at least 2 classes, got {len(labels)}")
    return {
        f"{labels[i]}|{labels[j]}": ssim(model[labels[i]].map, model[labels[j]].map)
        for i in range(len(labels))
        for j in range(i + 1, len(labels))
    }
