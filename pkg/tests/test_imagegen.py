import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from malvis import MalvisError
from malvis.imagegen import (
    bytes_to_image,
    default_width,
    entropy_profile,
    image_to_bytes,
    load_png,
    resize_image,
    save_entropy_csv,
    save_png,
)

from oracles import bilinear_oracle, entropy_oracle


class TestBytesToImage:
    def test_pixel_i_equals_byte_i(self):
        img = bytes_to_image(bytes([0, 255, 128]), width=3)
        assert img.shape == (1, 3)
        assert img.tolist() == [[0, 255, 128]]

    def test_partial_row_zero_padded(self):
        img = bytes_to_image(bytes([7] * 5), width=3)
        assert img.shape == (2, 3)
        assert img.tolist() == [[7, 7, 7], [7, 7, 0]]

    def test_width_table_default(self):
        img = bytes_to_image(b"\x01" * 5000)
        assert img.shape[1] == 32

    def test_empty_input_rejected(self):
        with pytest.raises(MalvisError, match="empty binary"):
            bytes_to_image(b"")

    def test_nonpositive_width_rejected(self):
        with pytest.raises(MalvisError, match="width"):
            bytes_to_image(b"abc", width=0)

    @pytest.mark.parametrize(
        "size,width",
        [
            (1, 32),
            (10 * 1024 - 1, 32),
            (10 * 1024, 64),
            (30 * 1024, 128),
            (60 * 1024, 256),
            (100 * 1024, 384),
            (200 * 1024, 512),
            (500 * 1024, 768),
            (1024 * 1024, 1024),
            (5 * 1024 * 1024, 1024),
        ],
    )
    def test_width_table_boundaries(self, size, width):
        assert default_width(size) == width

    @given(data=st.binary(min_size=1, max_size=400), width=st.integers(1, 40))
    def test_round_trip(self, data, width):
        img = bytes_to_image(data, width=width)
        assert image_to_bytes(img, len(data)) == data

    @given(st.binary(min_size=1, max_size=2000))
    def test_height_matches_ceil(self, data):
        img = bytes_to_image(data, width=16)
        assert img.shape[0] == math.ceil(len(data) / 16)

    def test_monotonic_height(self):
        heights = [bytes_to_image(b"x" * n, width=8).shape[0] for n in range(1, 100)]
        assert heights == sorted(heights)


class TestResize:
    def test_constant_image_any_target(self):
        img = np.array([[42]], dtype=np.uint8)
        out = resize_image(img, 5, 3)
        assert out.shape == (3, 5)
        assert (out == 42).all()

    def test_identity_resize(self):
        img = np.array([[0, 0], [255, 255]], dtype=np.uint8)
        assert (resize_image(img, 2, 2) == img).all()

    def test_2x2_to_4x4_matches_bilinear_oracle(self):
        # frozen from bilinear_oracle([[0,100],[200,60]], 4, 4), rounded half-up
        img = np.array([[0, 100], [200, 60]], dtype=np.uint8)
        expected = [
            [0, 25, 75, 100],
            [50, 60, 80, 90],
            [150, 130, 90, 70],
            [200, 165, 95, 60],
        ]
        assert resize_image(img, 4, 4).tolist() == expected

    def test_random_resize_matches_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            h, w = rng.integers(1, 9, size=2)
            th, tw = rng.integers(1, 17, size=2)
            img = rng.integers(0, 256, size=(h, w), dtype=np.uint8)
            want = bilinear_oracle(img.astype(float).tolist(), int(th), int(tw))
            got = resize_image(img, int(tw), int(th))
            rounded = [[min(max(math.floor(v + 0.5), 0), 255) for v in row] for row in want]
            assert got.tolist() == rounded

    def test_zero_target_rejected(self):
        with pytest.raises(MalvisError, match="positive"):
            resize_image(np.zeros((2, 2), dtype=np.uint8), 0, 4)


class TestEntropy:
    def test_single_symbol_window(self):
        prof = entropy_profile(b"\x41" * 256, window=256, stride=256)
        assert prof.values.tolist() == [0.0]

    def test_full_alphabet_window(self):
        prof = entropy_profile(bytes(range(256)), window=256, stride=256)
        assert prof.values.tolist() == [8.0]

    def test_two_symbol_even_split(self):
        prof = entropy_profile(b"\x00" * 128 + b"\xff" * 128, window=256, stride=256)
        assert prof.values.tolist() == [1.0]

    def test_window_larger_than_data_gives_empty(self):
        prof = entropy_profile(b"abc", window=16, stride=4)
        assert len(prof.values) == 0

    def test_window_count(self):
        data = bytes(range(100))
        prof = entropy_profile(data, window=10, stride=7)
        assert len(prof.values) == (100 - 10) // 7 + 1

    def test_matches_oracle_per_window(self):
        rng = np.random.default_rng(11)
        data = bytes(rng.integers(0, 256, size=500, dtype=np.uint8))
        prof = entropy_profile(data, window=64, stride=32)
        for k, val in enumerate(prof.values):
            assert val == pytest.approx(entropy_oracle(data[k * 32 : k * 32 + 64]), abs=1e-12)

    @given(st.binary(min_size=1, max_size=300))
    @settings(max_examples=30)
    def test_bounds(self, data):
        prof = entropy_profile(data, window=32, stride=16)
        assert ((prof.values >= 0) & (prof.values <= 8)).all()

    @given(st.permutations(list(b"abcdefgh" * 4)))
    @settings(max_examples=25)
    def test_permutation_invariant_within_window(self, perm):
        base = entropy_profile(bytes(b"abcdefgh" * 4), window=32, stride=32)
        shuffled = entropy_profile(bytes(perm), window=32, stride=32)
        assert shuffled.values.tolist() == base.values.tolist()

    def test_bad_window_rejected(self):
        with pytest.raises(MalvisError, match="window"):
            entropy_profile(b"abc", window=0, stride=1)


class TestPersistence:
    def test_png_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        img = rng.integers(0, 256, size=(9, 17), dtype=np.uint8)
        save_png(img, tmp_path / "x.png")
        assert (load_png(tmp_path / "x.png") == img).all()

    def test_entropy_csv_format(self, tmp_path):
        prof = entropy_profile(bytes(range(256)) * 2, window=256, stride=128)
        save_entropy_csv(prof, tmp_path / "e.csv")
        lines = (tmp_path / "e.csv").read_text().splitlines()
        assert lines[0] == "offset,entropy"
        assert lines[1] == "0,8.000000"
        assert lines[2] == "128,8.000000"
        assert len(lines) == 1 + len(prof.values)
