"""NPY v1.0 interchange files for feature/gradient stacks and heatmaps.

The on-disk contract is deliberately narrow: version 1.0, little-endian
float32, C order. Stacks are rank 3 with shape (F, D1, D2); heatmaps are
rank 2. The parser is hand-rolled so a defective file names its defect
(bad magic, wrong dtype, wrong rank, truncated payload) instead of
surfacing a generic parse failure.
"""

from __future__ import annotations

import ast

import numpy as np

from ._util import MalvisError

MAGIC = b"\x93NUMPY"
_DESCR = "<f4"


def write_npy(arr: np.ndarray, path) -> None:
    """Write a float32 C-order little-endian NPY v1.0 file (any rank)."""
    arr = np.ascontiguousarray(arr, dtype=np.dtype(_DESCR))
    shape = "(" + ", ".join(str(d) for d in arr.shape) + ("," if arr.ndim == 1 else "") + ")"
    header = f"{{'descr': '{_DESCR}', 'fortran_order': False, 'shape': {shape}, }}"
    # pad with spaces so magic+version+len+header is a multiple of 64, '\n' terminated
    base = len(MAGIC) + 2 + 2
    total = base + len(header) + 1
    pad = (64 - total % 64) % 64
    header_bytes = (header + " " * pad + "\n").encode("latin1")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes((1, 0)))
        fh.write(len(header_bytes).to_bytes(2, "little"))
        fh.write(header_bytes)
        fh.write(arr.tobytes())


def read_npy(path, expected_rank: int | None = None) -> np.ndarray:
    """Read an NPY v1.0 float32 file, optionally enforcing its rank."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < len(MAGIC) or raw[: len(MAGIC)] != MAGIC:
        raise MalvisError(f"bad magic: {path} is not an NPY file")
    if len(raw) < 10:
        raise MalvisError(f"truncated payload: {path} ends inside the header")
    major, minor = raw[6], raw[7]
    if (major, minor) != (1, 0):
        raise MalvisError(f"unsupported NPY version {major}.{minor}: expected 1.0")
    hlen = int.from_bytes(raw[8:10], "little")
    header_end = 10 + hlen
    if len(raw) < header_end:
        raise MalvisError(f"truncated payload: {path} ends inside the header")
    try:
        header = ast.literal_eval(raw[10:header_end].decode("latin1"))
        descr = header["descr"]
        fortran = header["fortran_order"]
        shape = tuple(header["shape"])
    except Exception as exc:
        raise MalvisError(f"malformed NPY header in {path}: {exc}") from exc
    if descr != _DESCR:
        raise MalvisError(f"wrong dtype: expected little-endian float32 ('{_DESCR}'), got '{descr}'")
    if fortran:
        raise MalvisError("fortran order not supported: expected C-order data")
    if expected_rank is not None and len(shape) != expected_rank:
        raise MalvisError(f"wrong rank: expected {expected_rank}, got {len(shape)}")
    count = 1
    for d in shape:
        count *= d
    payload = raw[header_end : header_end + count * 4]
    if len(payload) < count * 4:
        raise MalvisError(f"truncated payload: expected {count * 4} data bytes, got {len(payload)}")
    return np.frombuffer(payload, dtype=np.dtype(_DESCR)).reshape(shape).copy()


def write_tensor(stack: np.ndarray, path) -> None:
    """Persist a (F, D1, D2) float stack; values must be finite."""
    stack = np.asarray(stack)
    if stack.ndim != 3:
        raise MalvisError(f"wrong rank: expected 3, got {stack.ndim}")
    if not np.isfinite(stack).all():
        raise MalvisError("stack contains non-finite values")
    write_npy(stack, path)


def read_tensor(path) -> np.ndarray:
    """Load a (F, D1, D2) float32 stack, verifying rank and finiteness."""
    stack = read_npy(path, expected_rank=3)
    if not np.isfinite(stack).all():
        raise MalvisError(f"stack contains non-finite values: {path}")
    return stack


def write_heatmap(hm: np.ndarray, path) -> None:
    """Persist a 2-D heatmap as the same NPY interchange format."""
    hm = np.asarray(hm)
    if hm.ndim != 2:
        raise MalvisError(f"wrong rank: expected 2, got {hm.ndim}")
    write_npy(hm, path)


def read_heatmap(path) -> np.ndarray:
    """Load a 2-D heatmap, verifying values lie in [0, 1]."""
    hm = read_npy(path, expected_rank=2).astype(np.float64)
    if not np.isfinite(hm).all():
        raise MalvisError(f"heatmap contains non-finite values: {path}")
    if hm.min() < 0.0 or hm.max() > 1.0:
        raise MalvisError(f"heatmap values outside [0, 1]: {path}")
    return hm
