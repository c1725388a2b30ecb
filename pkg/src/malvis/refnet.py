"""A tiny fixed CNN that yields real feature maps and exact class-score gradients.

The network is framework-free and deterministic: conv3x3(1->4) + ReLU +
2x2 maxpool, conv3x3(4->8) + ReLU + 2x2 maxpool, then a linear head either
on the pooled map means ("gap-linear") or on the flattened maps
("flatten-linear"). Because the head is linear in the final feature maps,
the class-score gradients with respect to those maps have a closed form:

    gap-linear:      dS_m/dA[f, i, j] = W[m, f] / (D1 * D2)
    flatten-linear:  dS_m/dA[f, i, j] = W[m, flat_index(f, i, j)]

With the gap-linear head the gradient is constant per map, which forces
GradCAM and HiResCAM to coincide; the flatten-linear head makes them differ.

Weights are drawn from SplitMix64 (pinned here for cross-language
reproducibility), uniform in [-0.5, 0.5], in declaration order: conv1
kernels, conv1 biases, conv2 kernels, conv2 biases, head weights, head bias,
each filled in C order. Images are scaled by 1/255 before the first layer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._util import MalvisError
from .tensorio import read_npy, write_npy

CONV1_MAPS = 4
FEATURE_MAPS = 8
GAP_LINEAR = "gap-linear"
FLATTEN_LINEAR = "flatten-linear"
HEAD_KINDS = (GAP_LINEAR, FLATTEN_LINEAR)

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 PRNG (Steele et al. mix function), uniform doubles from the top 53 bits."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform in [-0.5, 0.5)."""
        return (self.next_u64() >> 11) * 2.0**-53 - 0.5

    def fill(self, *shape: int) -> np.ndarray:
        n = int(np.prod(shape)) if shape else 1
        out = np.array([self.uniform() for _ in range(n)], dtype=np.float32)
        return out.reshape(shape)


@dataclass
class RefNet:
    seed: int
    head_kind: str
    input_size: int
    class_count: int
    conv1_w: np.ndarray  # (4, 1, 3, 3)
    conv1_b: np.ndarray  # (4,)
    conv2_w: np.ndarray  # (8, 4, 3, 3)
    conv2_b: np.ndarray  # (8,)
    head_w: np.ndarray   # (M, 8) or (M, 8 * D1 * D2)
    head_b: np.ndarray   # (M,)

    @property
    def feature_size(self) -> int:
        return self.input_size // 4


def refnet_init(seed: int, head_kind: str, input_size: int, class_count: int) -> RefNet:
    """Build a RefNet with weights drawn deterministically from `seed`."""
    if head_kind not in HEAD_KINDS:
        raise MalvisError(f"unknown head kind {head_kind!r}: expected one of {HEAD_KINDS}")
    if input_size < 8:
        raise MalvisError(f"input size must be >= 8, got {input_size}")
    if class_count < 2:
        raise MalvisError(f"class count must be >= 2, got {class_count}")
    rng = SplitMix64(seed)
    d = input_size // 4
    head_inputs = FEATURE_MAPS if head_kind == GAP_LINEAR else FEATURE_MAPS * d * d
    return RefNet(
        seed=seed,
        head_kind=head_kind,
        input_size=input_size,
        class_count=class_count,
        conv1_w=rng.fill(CONV1_MAPS, 1, 3, 3),
        conv1_b=rng.fill(CONV1_MAPS),
        conv2_w=rng.fill(FEATURE_MAPS, CONV1_MAPS, 3, 3),
        conv2_b=rng.fill(FEATURE_MAPS),
        head_w=rng.fill(class_count, head_inputs),
        head_b=rng.fill(class_count),
    )


def _conv3x3_same(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """3x3 convolution, zero-padded to keep size; x is (Cin, H, W) float64."""
    cin, h, w = x.shape
    cout = kernels.shape[0]
    padded = np.zeros((cin, h + 2, w + 2), dtype=np.float64)
    padded[:, 1:-1, 1:-1] = x
    out = np.empty((cout, h, w), dtype=np.float64)
    kern = kernels.astype(np.float64)
    for co in range(cout):
        acc = np.full((h, w), float(bias[co]), dtype=np.float64)
        for ci in range(cin):
            for dy in range(3):
                for dx in range(3):
                    acc += kern[co, ci, dy, dx] * padded[ci, dy : dy + h, dx : dx + w]
        out[co] = acc
    return out


def _maxpool2(x: np.ndarray) -> np.ndarray:
    """Non-overlapping 2x2 max pool (floor mode: trailing odd row/column dropped)."""
    c, h, w = x.shape
    h2, w2 = h // 2, w // 2
    t = x[:, : h2 * 2, : w2 * 2].reshape(c, h2, 2, w2, 2)
    return t.max(axis=(2, 4))


def head_scores(net: RefNet, features: np.ndarray) -> np.ndarray:
    """Class scores from final feature maps (the function the gradients differentiate)."""
    feats = np.asarray(features, dtype=np.float64)
    w = net.head_w.astype(np.float64)
    b = net.head_b.astype(np.float64)
    if net.head_kind == GAP_LINEAR:
        pooled = feats.reshape(feats.shape[0], -1).mean(axis=1)
        return w @ pooled + b
    return w @ feats.reshape(-1) + b


def refnet_forward(net: RefNet, img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Run the network; returns (scores: (M,) float64, features: (8, D, D) float32)."""
    img = np.asarray(img)
    if img.shape != (net.input_size, net.input_size):
        raise MalvisError(
            f"wrong input size: expected {net.input_size}x{net.input_size}, got {img.shape[0]}x{img.shape[1]}"
        )
    x = img.astype(np.float64) / 255.0
    a1 = _maxpool2(np.maximum(_conv3x3_same(x[None, :, :], net.conv1_w, net.conv1_b), 0.0))
    a2 = _maxpool2(np.maximum(_conv3x3_same(a1, net.conv2_w, net.conv2_b), 0.0))
    features = a2.astype(np.float32)
    return head_scores(net, features), features


def refnet_feature_gradients(net: RefNet, features: np.ndarray, class_index: int) -> np.ndarray:
    """Closed-form dS_m/dA for the final feature maps, as a float32 stack."""
    if not 0 <= class_index < net.class_count:
        raise MalvisError(f"class index {class_index} out of range for {net.class_count} classes")
    feats = np.asarray(features)
    f, d1, d2 = feats.shape
    if net.head_kind == GAP_LINEAR:
        per_map = net.head_w[class_index].astype(np.float64) / float(d1 * d2)
        grads = np.broadcast_to(per_map[:, None, None], (f, d1, d2)).copy()
    else:
        grads = net.head_w[class_index].astype(np.float64).reshape(f, d1, d2).copy()
    return grads.astype(np.float32)


def save_refnet(net: RefNet, out_dir) -> None:
    """Serialize weights as NPY files plus a JSON descriptor."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_npy(net.conv1_w, out / "conv1_w.npy")
    write_npy(net.conv1_b, out / "conv1_b.npy")
    write_npy(net.conv2_w, out / "conv2_w.npy")
    write_npy(net.conv2_b, out / "conv2_b.npy")
    write_npy(net.head_w, out / "head_w.npy")
    write_npy(net.head_b, out / "head_b.npy")
    desc = {
        "seed": net.seed,
        "head_kind": net.head_kind,
        "input_size": net.input_size,
        "class_count": net.class_count,
        "feature_maps": FEATURE_MAPS,
        "feature_size": net.feature_size,
        "generator": "splitmix64",
        "preprocess": "divide by 255",
    }
    (out / "refnet.json").write_text(json.dumps(desc, indent=2) + "\n", encoding="utf-8")


def load_refnet(in_dir) -> RefNet:
    """Load a serialized RefNet, verifying the stored shapes."""
    src = Path(in_dir)
    try:
        desc = json.loads((src / "refnet.json").read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise MalvisError(f"missing refnet descriptor: {src / 'refnet.json'}")
    if desc.get("head_kind") not in HEAD_KINDS:
        raise MalvisError(f"unknown head kind in descriptor: {desc.get('head_kind')!r}")
    net = RefNet(
        seed=int(desc["seed"]),
        head_kind=desc["head_kind"],
        input_size=int(desc["input_size"]),
        class_count=int(desc["class_count"]),
        conv1_w=read_npy(src / "conv1_w.npy", expected_rank=4),
        conv1_b=read_npy(src / "conv1_b.npy", expected_rank=1),
        conv2_w=read_npy(src / "conv2_w.npy", expected_rank=4),
        conv2_b=read_npy(src / "conv2_b.npy", expected_rank=1),
        head_w=read_npy(src / "head_w.npy", expected_rank=2),
        head_b=read_npy(src / "head_b.npy", expected_rank=1),
    )
    d = net.feature_size
    expected = FEATURE_MAPS if net.head_kind == GAP_LINEAR else FEATURE_MAPS * d * d
    if net.head_w.shape != (net.class_count, expected):
        raise MalvisError(f"head weights shape {net.head_w.shape} does not match descriptor")
    return net
