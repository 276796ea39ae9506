"""
Selection of the conditional sampling methods.
"""
from __future__ import annotations

from enum import Enum

from ..logger import logger
from ..spectral import SpectralDecomposition
from ..utils import SeedLike
from .ensemble import ConditionalEnsemble
from .samplers import (
    REJECTION_BUDGET,
    sample_conditional_decomposition,
    sample_conditional_rejection,
)

class _SamplerStatCollector:
    """
    Counts the runs and draws of all samplers
    over the lifetime of the process.
    """
    _instance = None
    def __new__(cls, *args, **kwargs):
        if not cls._instance:
            cls._instance = super().__new__(cls)
            cls._instance.reset()
        return cls._instance

    def reset(self) -> None:
        self._n_rejection = 0
        self._n_decomposition = 0
        self._n_fallbacks = 0
        self._attempts = 0
        self._samples = 0

STATS = _SamplerStatCollector()

class RejectionSampler:
    """
    Plain rejection from the unconditional law.
    Feasible while P(||phi||^2 > r) is not too small.
    """
    NAME = "rejection"

    def __init__(self, budget: int = REJECTION_BUDGET) -> None:
        self.budget = int(budget)

    def sample(self,
               decomp: SpectralDecomposition,
               r: float,
               n: int,
               seed: SeedLike,
               njobs: int = 1) -> ConditionalEnsemble:
        ensemble = sample_conditional_rejection(
            decomp, r, n, seed, budget=self.budget, njobs=njobs
        )
        STATS._n_rejection += 1
        STATS._attempts += ensemble.attempts
        STATS._samples += ensemble.n
        return ensemble

class DecompositionSampler:
    """
    Exact tilted decomposition sampler with bounded
    importance weights. Needs a strict spectral gap.
    """
    NAME = "decomposition"

    def __init__(self, budget: int | None = None) -> None:
        # Cost is fixed by n, there is no budget.
        self.budget = budget

    def sample(self,
               decomp: SpectralDecomposition,
               r: float,
               n: int,
               seed: SeedLike,
               njobs: int = 1) -> ConditionalEnsemble:
        ensemble = sample_conditional_decomposition(decomp, r, n, seed, njobs=njobs)
        STATS._n_decomposition += 1
        STATS._attempts += ensemble.attempts
        STATS._samples += ensemble.n
        return ensemble

class ConditioningMethod(Enum):
    """
    Selection of the conditional samplers.
    """
    __order__ = "REJECTION DECOMPOSITION"
    REJECTION = RejectionSampler
    DECOMPOSITION = DecompositionSampler

    @classmethod
    def from_name(cls, name: str) -> ConditioningMethod:
        for method in cls:
            if method.value.NAME == name:
                return method
        raise ValueError(
            f"Unknown conditioning method {name!r}. "
            f"Choose from {[m.value.NAME for m in cls]}."
        )

def record_fallback() -> None:
    STATS._n_fallbacks += 1

def print_sampler_stats() -> None:
    """
    Log a summary table of all sampler runs.
    """
    title = "Conditional Sampling Summary"
    separator = "-" * 50
    logger.info(title)
    logger.info(separator)
    logger.info(f"{'Metric':<30}{'Value':>20}")
    logger.info(separator)
    logger.info(f"{'Rejection runs':<30}{STATS._n_rejection:>20_}")
    logger.info(f"{'Decomposition runs':<30}{STATS._n_decomposition:>20_}")
    logger.info(f"{'Budget fallbacks':<30}{STATS._n_fallbacks:>20_}")
    logger.info(f"{'Draws consumed':<30}{STATS._attempts:>20_}")
    logger.info(f"{'Samples kept':<30}{STATS._samples:>20_}")
    logger.info(separator)
