"""Multiclass confusion matrices and accuracy / precision / recall / F1.

Rows are true classes, columns predicted. Precision and recall are
one-vs-rest per class and macro-averaged; F1 is the macro mean of the
per-class harmonic means. A class with no predicted positives contributes
precision 0, one with no actual positives contributes recall 0 (and a
class with p + r = 0 contributes F1 0), so the metrics stay defined on
degenerate outcomes.
"""

from __future__ import annotations

import numpy as np

from ._util import MalvisError


def confusion_matrix(labels, preds, n: int) -> np.ndarray:
    """Tally an n x n matrix: counts[t][p] = #{i : labels_i = t and preds_i = p}."""
    labels = np.asarray(labels, dtype=np.int64)
    preds = np.asarray(preds, dtype=np.int64)
    if labels.shape != preds.shape or labels.ndim != 1:
        raise MalvisError(f"labels/predictions length mismatch: {labels.shape} vs {preds.shape}")
    if n < 1:
        raise MalvisError(f"class count must be >= 1, got {n}")
    if len(labels) and (labels.min() < 0 or labels.max() >= n or preds.min() < 0 or preds.max() >= n):
        raise MalvisError(f"class index out of range for {n} classes")
    counts = np.zeros((n, n), dtype=np.int64)
    np.add.at(counts, (labels, preds), 1)
    return counts


def classification_metrics(cm: np.ndarray) -> dict[str, float]:
    """Accuracy plus macro precision/recall/F1 from a confusion matrix."""
    cm = np.asarray(cm, dtype=np.int64)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.shape[0] == 0:
        raise MalvisError(f"confusion matrix must be square and non-empty, got shape {cm.shape}")
    if (cm < 0).any():
        raise MalvisError("confusion matrix counts must be nonnegative")
    total = int(cm.sum())
    if total == 0:
        raise MalvisError("confusion matrix has no samples")

    tp = np.diag(cm).astype(np.float64)
    predicted = cm.sum(axis=0).astype(np.float64)  # column sums
    actual = cm.sum(axis=1).astype(np.float64)     # row sums

    precision = np.divide(tp, predicted, out=np.zeros_like(tp), where=predicted > 0)
    recall = np.divide(tp, actual, out=np.zeros_like(tp), where=actual > 0)
    pr_sum = precision + recall
    f1 = np.divide(2.0 * precision * recall, pr_sum, out=np.zeros_like(tp), where=pr_sum > 0)

    return {
        "accuracy": float(tp.sum() / total),
        "precision": float(precision.mean()),
        "recall": float(recall.mean()),
        "f1": float(f1.mean()),
    }


def metrics_to_json(metrics: dict[str, float]) -> str:
    """UTF-8 JSON with 4 decimal places, fixed key order."""
    keys = ("accuracy", "precision", "recall", "f1")
    return "{" + ", ".join(f'"{k}": {metrics[k]:.4f}' for k in keys) + "}"


def save_confusion_csv(cm: np.ndarray, class_labels: list[str], path) -> None:
    """CSV with a header row of class labels; data rows are true-class counts."""
    cm = np.asarray(cm)
    if len(class_labels) != cm.shape[0]:
        raise MalvisError(f"{len(class_labels)} labels for a {cm.shape[0]}-class matrix")
    lines = ["," + ",".join(class_labels)]
    for label, row in zip(class_labels, cm):
        lines.append(label + "," + ",".join(str(int(v)) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
