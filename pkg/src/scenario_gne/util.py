"""Shared plumbing: deterministic RNG streams, worker pools, provenance stamps."""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

from .errors import ConfigError

THREADS_ENV = "SCENARIO_GNE_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def rng_stream(seed: int, *path: int) -> np.random.Generator:
    """Counter-based generator for the stream addressed by (seed, *path).

    Streams are independent across distinct paths and do not depend on the
    order in which they are created, so parallel producers draw identical
    numbers to a sequential run.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def child_seed(seed: int, tag: int) -> int:
    """Derive an independent 63-bit integer seed from (seed, tag)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(tag),))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


def worker_count() -> int:
    """Worker cap from the SCENARIO_GNE_THREADS env var; defaults to 1."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be >= 1, got {n}")
    return n


def parallel_map(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    """Map fn over items, dispatching to a thread pool when workers > 1.

    Results are always merged in input order, so the outcome is identical
    regardless of scheduling.
    """
    workers = worker_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def freeze(arr: np.ndarray) -> np.ndarray:
    """Return a read-only float64 copy of arr (immutability convention)."""
    out = np.array(arr, dtype=float)
    out.flags.writeable = False
    return out


def config_digest(doc: object) -> str:
    """Stable sha256 over the canonical JSON form of a config document."""
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def provenance_lines(config_hash: str, seed: int, version: str) -> list[str]:
    """Comment lines embedded at the top of every CSV artifact."""
    return [
        f"# config_sha256={config_hash}",
        f"# seed={seed}",
        f"# toolkit_version={version}",
    ]
