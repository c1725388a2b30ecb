import dataclasses

import numpy as np
import pytest

from malvis import MalvisError
from malvis.cam import gradcam_raw, hirescam_raw
from malvis.refnet import (
    FLATTEN_LINEAR,
    GAP_LINEAR,
    SplitMix64,
    head_scores,
    load_refnet,
    refnet_feature_gradients,
    refnet_forward,
    refnet_init,
    save_refnet,
)

from oracles import fd_feature_gradients


def _random_image(rng, size):
    return rng.integers(0, 256, size=(size, size), dtype=np.uint8)


class TestGenerator:
    def test_splitmix64_known_stream(self):
        # reference stream for seed 1234567 (Steele et al. mix constants)
        rng = SplitMix64(1234567)
        assert rng.next_u64() == 6457827717110365317
        assert rng.next_u64() == 3203168211198807973

    def test_uniform_range(self):
        rng = SplitMix64(99)
        vals = [rng.uniform() for _ in range(1000)]
        assert all(-0.5 <= v < 0.5 for v in vals)


class TestInit:
    def test_same_seed_bit_identical(self):
        a = refnet_init(7, GAP_LINEAR, 28, 3)
        b = refnet_init(7, GAP_LINEAR, 28, 3)
        for field in ("conv1_w", "conv1_b", "conv2_w", "conv2_b", "head_w", "head_b"):
            assert np.array_equal(getattr(a, field), getattr(b, field))

    def test_different_seeds_differ(self):
        a = refnet_init(1, GAP_LINEAR, 28, 3)
        b = refnet_init(2, GAP_LINEAR, 28, 3)
        assert not np.array_equal(a.conv1_w, b.conv1_w)

    def test_gap_head_shape(self):
        net = refnet_init(3, GAP_LINEAR, 28, 2)
        assert net.head_w.shape == (2, 8)

    def test_flatten_head_shape(self):
        net = refnet_init(3, FLATTEN_LINEAR, 28, 2)
        assert net.head_w.shape == (2, 8 * 7 * 7)

    def test_preconditions(self):
        with pytest.raises(MalvisError, match="input size"):
            refnet_init(1, GAP_LINEAR, 4, 2)
        with pytest.raises(MalvisError, match="class count"):
            refnet_init(1, GAP_LINEAR, 28, 1)
        with pytest.raises(MalvisError, match="head kind"):
            refnet_init(1, "softmax", 28, 2)


class TestForward:
    def test_zero_image_zero_biases(self):
        net = refnet_init(11, GAP_LINEAR, 16, 2)
        net = dataclasses.replace(net, conv1_b=np.zeros_like(net.conv1_b), conv2_b=np.zeros_like(net.conv2_b))
        scores, features = refnet_forward(net, np.zeros((16, 16), dtype=np.uint8))
        assert (features == 0).all()
        assert np.allclose(scores, net.head_b.astype(np.float64))

    def test_feature_shape_two_pools(self):
        net = refnet_init(5, GAP_LINEAR, 28, 2)
        _, features = refnet_forward(net, _random_image(np.random.default_rng(0), 28))
        assert features.shape == (8, 7, 7)

    def test_gap_scores_match_independent_matrix_arithmetic(self):
        net = refnet_init(21, GAP_LINEAR, 8, 3)
        scores, features = refnet_forward(net, _random_image(np.random.default_rng(1), 8))
        # independent check: per-map means, then plain matrix multiply plus bias
        pooled = [float(np.mean(features[f])) for f in range(features.shape[0])]
        want = [
            sum(float(net.head_w[m, f]) * pooled[f] for f in range(len(pooled))) + float(net.head_b[m])
            for m in range(3)
        ]
        assert np.allclose(scores, want, atol=1e-9)

    def test_wrong_input_size_rejected(self):
        net = refnet_init(5, GAP_LINEAR, 28, 2)
        with pytest.raises(MalvisError, match="wrong input size"):
            refnet_forward(net, np.zeros((16, 16), dtype=np.uint8))

    def test_deterministic_forward(self):
        net = refnet_init(13, FLATTEN_LINEAR, 16, 2)
        img = _random_image(np.random.default_rng(2), 16)
        s1, f1 = refnet_forward(net, img)
        s2, f2 = refnet_forward(net, img)
        assert np.array_equal(s1, s2) and np.array_equal(f1, f2)


class TestGradients:
    def test_gap_zero_head_row_zero_gradients(self):
        net = refnet_init(4, GAP_LINEAR, 16, 2)
        hw = net.head_w.copy()
        hw[0] = 0
        net = dataclasses.replace(net, head_w=hw)
        grads = refnet_feature_gradients(net, np.zeros((8, 4, 4), dtype=np.float32), 0)
        assert (grads == 0).all()

    def test_gap_closed_form_value(self):
        net = refnet_init(4, GAP_LINEAR, 28, 2)
        hw = net.head_w.copy()
        hw[1, :] = 0.98
        net = dataclasses.replace(net, head_w=hw)
        grads = refnet_feature_gradients(net, np.zeros((8, 7, 7), dtype=np.float32), 1)
        assert np.allclose(grads, 0.98 / 49, atol=1e-7)

    def test_class_out_of_range(self):
        net = refnet_init(4, GAP_LINEAR, 16, 2)
        with pytest.raises(MalvisError, match="out of range"):
            refnet_feature_gradients(net, np.zeros((8, 4, 4), dtype=np.float32), 2)

    @pytest.mark.parametrize("head_kind", [GAP_LINEAR, FLATTEN_LINEAR])
    def test_matches_finite_differences(self, head_kind):
        rng = np.random.default_rng(33)
        net = refnet_init(17, head_kind, 16, 3)
        _, features = refnet_forward(net, _random_image(rng, 16))
        m = 1
        closed = refnet_feature_gradients(net, features, m)
        fd = fd_feature_gradients(lambda f: head_scores(net, f)[m], features, eps=1e-3)
        assert np.abs(closed.astype(np.float64) - fd).max() < 1e-4


class TestCamEquality:
    def test_gap_head_makes_gradcam_equal_hirescam(self):
        rng = np.random.default_rng(44)
        net = refnet_init(55, GAP_LINEAR, 16, 3)
        for _ in range(5):
            _, features = refnet_forward(net, _random_image(rng, 16))
            grads = refnet_feature_gradients(net, features, 2)
            diff = np.abs(gradcam_raw(features, grads) - hirescam_raw(features, grads)).max()
            assert diff < 1e-6

    def test_flatten_head_diverges_for_some_seed(self):
        rng = np.random.default_rng(45)
        best = 0.0
        for seed in range(20):
            net = refnet_init(seed, FLATTEN_LINEAR, 16, 3)
            _, features = refnet_forward(net, _random_image(rng, 16))
            grads = refnet_feature_gradients(net, features, 0)
            diff = np.abs(gradcam_raw(features, grads) - hirescam_raw(features, grads)).max()
            best = max(best, float(diff))
        assert best > 1e-3


class TestSerialization:
    def test_save_load_round_trip(self, tmp_path):
        net = refnet_init(99, FLATTEN_LINEAR, 16, 4)
        save_refnet(net, tmp_path / "net")
        back = load_refnet(tmp_path / "net")
        assert back.seed == net.seed
        assert back.head_kind == net.head_kind
        for field in ("conv1_w", "conv1_b", "conv2_w", "conv2_b", "head_w", "head_b"):
            assert np.array_equal(getattr(back, field), getattr(net, field))
        img = _random_image(np.random.default_rng(3), 16)
        s1, f1 = refnet_forward(net, img)
        s2, f2 = refnet_forward(back, img)
        assert np.array_equal(s1, s2) and np.array_equal(f1, f2)

    def test_missing_descriptor(self, tmp_path):
        with pytest.raises(MalvisError, match="descriptor"):
            load_refnet(tmp_path)
