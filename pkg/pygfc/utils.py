"""
Utility functions for pygfc
"""
from __future__ import annotations

import json
import multiprocessing as mp
import math
import time
from pathlib import Path
from typing import Any, Callable, Iterable

import numpy as np
import psutil

from .logger import logger

SeedLike = int | np.random.SeedSequence

# Samples per chunk for chunked sampling. The partition
# of a run into chunks only depends on this number, never
# on the number of worker processes.
CHUNK_SIZE = 8192

def seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    """
    Return a SeedSequence for `seed`. Integers are
    mandatory; there is no implicit entropy.
    """
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if seed is None or isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise ValueError(f"An explicit integer seed is required, got {seed!r}.")
    return np.random.SeedSequence(int(seed))

def child_sequence(seed: SeedLike, index: int) -> np.random.SeedSequence:
    """
    Return the `index`-th child stream of `seed`.
    Unlike ``SeedSequence.spawn`` this does not depend
    on how many children were spawned before.
    """
    parent = seed_sequence(seed)
    return np.random.SeedSequence(
        entropy=parent.entropy,
        spawn_key=tuple(parent.spawn_key) + (int(index),),
        pool_size=parent.pool_size,
    )

def make_rng(seed: SeedLike, index: int | None = None) -> np.random.Generator:
    """
    PCG64 generator for `seed`, or for its
    `index`-th child stream if given.
    """
    ss = seed_sequence(seed) if index is None else child_sequence(seed, index)
    return np.random.Generator(np.random.PCG64(ss))

def stream_id(ss: np.random.SeedSequence) -> str:
    """
    Human readable identifier of a seeded stream.
    """
    key = ".".join(str(k) for k in ss.spawn_key) or "root"
    return f"{ss.entropy}:{key}"

def chunk_sizes(n: int, size: int = CHUNK_SIZE) -> list[int]:
    """
    Split `n` samples into consecutive chunks
    of at most `size` samples.
    """
    if n <= 0:
        return []
    full, rest = divmod(n, size)
    return [size]*full + ([rest] if rest else [])

def pool_map(func: Callable[[Any], Any], items: list[Any], njobs: int = 1) -> list[Any]:
    """
    Map `func` over `items`, in a process pool if
    njobs > 1. Results keep the order of `items`.
    `func` must be a picklable top-level function.
    """
    if njobs < 1:
        raise ValueError(f"njobs must be positive, got {njobs}.")
    if njobs == 1 or len(items) <= 1:
        return [func(item) for item in items]
    with mp.Pool(min(njobs, len(items))) as pool:
        return pool.map(func, items)

def log1m_prod(x: Iterable[float], powers: Iterable[float] | None = None) -> float:
    """
    log of prod_j (1 - x_j)**powers_j with log1p
    for accuracy when x_j is small. Requires x_j < 1.
    """
    x = np.asarray(list(x), dtype=float)
    if powers is None:
        powers = np.ones_like(x)
    else:
        powers = np.asarray(list(powers), dtype=float)
    if x.size == 0:
        return 0.0
    if np.any(x >= 1):
        raise ValueError("log1m_prod needs all entries below one.")
    return math.fsum((powers*np.log1p(-x)).tolist())

def memory_usage() -> str:
    """Current system memory usage"""
    vm = psutil.virtual_memory()
    return f"{vm.percent}% [{vm.used/1e9:.2f} GB]"

class Timer:
    """
    Context manager logging the wall time and
    memory usage of the enclosed block.

        with Timer("Sampling r=10"):
            ...
    """
    def __init__(self, desc: str) -> None:
        self.desc = desc
        self.elapsed = 0.0

    def __enter__(self) -> Timer:
        self.t_start = time.perf_counter()
        logger.debug(f"{self.desc} started. Memory usage: {memory_usage()}")
        return self

    def __exit__(self, exc_type, exc_value, tb) -> None:
        self.elapsed = time.perf_counter() - self.t_start
        if exc_type is None:
            logger.info(f"{self.desc} completed in [{self.elapsed:.1f} s]")
        logger.debug(f"Memory usage: {memory_usage()}")

def to_builtin(obj: Any) -> Any:
    """
    Recursively convert numpy scalars and arrays
    into plain Python objects for JSON dumping.
    """
    if isinstance(obj, dict):
        return {str(k): to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_builtin(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        obj = float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        # JSON has no inf/nan
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj

def dump_json(obj: Any, path: Path | None = None) -> str:
    """
    Canonical JSON: sorted keys, fixed indent,
    trailing newline. Writes to `path` if given.
    """
    text = json.dumps(to_builtin(obj), sort_keys=True, indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
