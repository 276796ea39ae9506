"""
Chunked batch synthesis of unconditional samples.

A run of n samples is cut into chunks of `CHUNK_SIZE`;
chunk k draws from the k-th child stream of the seed.
Chunks may be evaluated in worker processes and are
concatenated in chunk order, so the resulting frame is
the same for any number of workers.
"""
from __future__ import annotations

import numpy as np
import pandas as pd

from ..io import SampleColumns
from ..logger import logger
from ..spectral import SpectralDecomposition
from ..utils import CHUNK_SIZE, SeedLike, Timer, chunk_sizes, memory_usage, pool_map
from .fields import CoefficientStream, SamplingError, norm_table

_COLUMNS = [c.value for c in SampleColumns]

def synthesize_batch(decomp: SpectralDecomposition,
                     S: np.ndarray,
                     start_id: int = 0,
                     weights: np.ndarray | None = None) -> pd.DataFrame:
    """
    Norm table of a batch of coefficient rows as a
    DataFrame with the `SampleColumns` layout.
    Unit weights unless given.
    """
    S = np.atleast_2d(S)
    if S.shape[1] != decomp.n_modes:
        raise SamplingError(
            f"Got {S.shape[1]} coefficients per row for "
            f"{decomp.n_modes} retained modes."
        )
    table = norm_table(decomp, S)
    n = S.shape[0]
    table[SampleColumns.SAMPLE_ID.value] = np.arange(start_id, start_id + n, dtype=np.int64)
    table[SampleColumns.WEIGHT.value] = (
        np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    )
    return pd.DataFrame(table, columns=_COLUMNS)

def _unconditional_chunk(args: tuple) -> pd.DataFrame:
    decomp, seed, index, size, start = args
    stream = CoefficientStream(seed, index)
    S = stream.normal((size, decomp.n_modes))
    logger.debug(f"Chunk {index}: {size} samples from stream {stream.id}")
    return synthesize_batch(decomp, S, start_id=start)

def sample_unconditional(decomp: SpectralDecomposition,
                         n: int,
                         seed: SeedLike,
                         njobs: int = 1,
                         chunk_size: int = CHUNK_SIZE) -> pd.DataFrame:
    """
    Draw `n` unconditional coupled samples and
    return their norms, one row per sample.
    """
    if n < 1:
        raise SamplingError(f"Sample count must be positive, got {n}.")
    sizes = chunk_sizes(n, chunk_size)
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int)
    jobs = [
        (decomp, seed, k, size, int(start))
        for k, (size, start) in enumerate(zip(sizes, starts))
    ]
    with Timer(f"Unconditional sampling of {n} fields in {len(jobs)} chunk(s)"):
        frames = pool_map(_unconditional_chunk, jobs, njobs)
    logger.debug(f"Memory usage after sampling: {memory_usage()}")
    return pd.concat(frames, ignore_index=True)
