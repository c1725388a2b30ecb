"""Shared plumbing: the toolkit error type and worker-pool sizing."""

from __future__ import annotations

import os

THREADS_ENV = "MALVIS_THREADS"


class MalvisError(ValueError):
    """Raised for invalid data or arguments; the CLI maps it to exit code 2."""


def worker_count() -> int:
    """Worker cap from MALVIS_THREADS (0 or unset = one worker per CPU)."""
    raw = os.environ.get(THREADS_ENV, "0").strip()
    try:
        n = int(raw)
    except ValueError:
        raise MalvisError(f"{THREADS_ENV} must be a nonnegative integer, got {raw!r}")
    if n < 0:
        raise MalvisError(f"{THREADS_ENV} must be a nonnegative integer, got {raw!r}")
    return n if n > 0 else (os.cpu_count() or 1)
