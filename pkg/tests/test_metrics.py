import numpy as np
import pytest

from malvis import MalvisError
from malvis.metrics import (
    classification_metrics,
    confusion_matrix,
    metrics_to_json,
    save_confusion_csv,
)

from oracles import tally_oracle


class TestConfusionMatrix:
    def test_perfect_diagonal(self):
        cm = confusion_matrix([0, 1, 2], [0, 1, 2], 3)
        assert np.array_equal(cm, np.eye(3, dtype=np.int64))

    def test_all_wrong(self):
        cm = confusion_matrix([0, 0], [1, 1], 2)
        assert cm.tolist() == [[0, 2], [0, 0]]

    def test_random_matches_tally_oracle(self):
        rng = np.random.default_rng(0)
        labels = rng.integers(0, 7, size=500).tolist()
        preds = rng.integers(0, 7, size=500).tolist()
        cm = confusion_matrix(labels, preds, 7)
        assert cm.tolist() == tally_oracle(labels, preds, 7)
        assert int(cm.sum()) == 500

    def test_length_mismatch(self):
        with pytest.raises(MalvisError, match="length mismatch"):
            confusion_matrix([0, 1], [0], 2)

    def test_out_of_range(self):
        with pytest.raises(MalvisError, match="out of range"):
            confusion_matrix([0, 2], [0, 1], 2)


class TestClassificationMetrics:
    def test_perfect_predictions(self):
        m = classification_metrics(np.diag([5, 3, 2]))
        assert m == {"accuracy": 1.0, "precision": 1.0, "recall": 1.0, "f1": 1.0}

    def test_hand_computed_two_class_case(self):
        m = classification_metrics(np.array([[8, 2], [3, 7]]))
        p0, r0, p1, r1 = 8 / 11, 8 / 10, 7 / 9, 7 / 10
        f0 = 2 * p0 * r0 / (p0 + r0)
        f1 = 2 * p1 * r1 / (p1 + r1)
        assert m["accuracy"] == pytest.approx(0.75, abs=1e-12)
        assert m["precision"] == pytest.approx((p0 + p1) / 2, abs=1e-12)
        assert m["recall"] == pytest.approx((r0 + r1) / 2, abs=1e-12)
        assert m["f1"] == pytest.approx((f0 + f1) / 2, abs=1e-12)

    def test_all_wrong_binary(self):
        m = classification_metrics(np.array([[0, 3], [4, 0]]))
        assert m == {"accuracy": 0.0, "precision": 0.0, "recall": 0.0, "f1": 0.0}

    def test_binary_accuracy_specialization(self):
        # trace/total equals (TP+TN)/(TP+FN+TN+FP) with class 0 as positive
        rng = np.random.default_rng(1)
        for _ in range(20):
            cm = rng.integers(0, 30, size=(2, 2))
            if cm.sum() == 0:
                continue
            tp, fn, fp, tn = cm[0, 0], cm[0, 1], cm[1, 0], cm[1, 1]
            acc = classification_metrics(cm)["accuracy"]
            assert acc == pytest.approx((tp + tn) / (tp + fn + tn + fp), abs=1e-15)

    def test_metrics_within_unit_interval(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            cm = rng.integers(0, 20, size=(4, 4))
            if cm.sum() == 0:
                continue
            m = classification_metrics(cm)
            assert all(0.0 <= v <= 1.0 for v in m.values())

    def test_accuracy_equals_micro_recall(self):
        rng = np.random.default_rng(3)
        cm = rng.integers(0, 25, size=(5, 5))
        m = classification_metrics(cm)
        micro_recall = np.trace(cm) / cm.sum()
        assert m["accuracy"] == pytest.approx(micro_recall, abs=1e-15)

    def test_permutation_invariant(self):
        rng = np.random.default_rng(4)
        cm = rng.integers(0, 25, size=(4, 4))
        perm = rng.permutation(4)
        permuted = cm[np.ix_(perm, perm)]
        a = classification_metrics(cm)
        b = classification_metrics(permuted)
        for k in a:
            assert a[k] == pytest.approx(b[k], abs=1e-12)

    def test_zero_prediction_class_contributes_zero_precision(self):
        # nothing ever predicted as class 1
        m = classification_metrics(np.array([[5, 0], [3, 0]]))
        assert m["precision"] == pytest.approx((5 / 8 + 0) / 2)

    def test_empty_matrix_rejected(self):
        with pytest.raises(MalvisError, match="no samples"):
            classification_metrics(np.zeros((2, 2), dtype=np.int64))


class TestEmission:
    def test_json_four_decimals(self):
        text = metrics_to_json({"accuracy": 0.75, "precision": 0.7525252, "recall": 0.75, "f1": 0.7493734})
        assert text == '{"accuracy": 0.7500, "precision": 0.7525, "recall": 0.7500, "f1": 0.7494}'

    def test_confusion_csv(self, tmp_path):
        cm = np.array([[8, 2], [3, 7]])
        save_confusion_csv(cm, ["benign", "worm"], tmp_path / "cm.csv")
        lines = (tmp_path / "cm.csv").read_text().splitlines()
        assert lines == [",benign,worm", "benign,8,2", "worm,3,7"]
