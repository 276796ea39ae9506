"""
Module for assembling acceptance suites.
All check functions must have the following signature:
    def check_name(ctx: VerifyContext, *args, **kwargs) -> list[ReportRow]:
        ...

Checks return report rows; a check passes if all its
rows carry a passing verdict.

To make a suite, fix the check functions' extra
arguments so that only the context argument remains,
e.g. with `functools.partial`, and pass them to the
Suite class.

Example:
    from functools import partial
    from pygfc.verify import checks, Suite, VerifyContext

    suite = Suite(
        checks.gamma_law,
        partial(checks.exact_tail_agreement, r=5.0),
    )
    report = suite.run(VerifyContext(seed=7))

"""
from __future__ import annotations

from functools import cached_property
from inspect import signature
from pathlib import Path
from typing import Callable

import numpy as np

from ..analysis import AnalysisReport, ReportRow, SpectrumSummary
from ..conditioning import ConditionalEnsemble, sample_conditional_decomposition
from ..kernels import make_kernel
from ..logger import logger
from ..spectral import SpectralDecomposition, build_grid, decompose
from ..utils import SeedLike, Timer, child_sequence

# Reference spectrum kappa_1 = 1, kappa_2 = 0.5
REFERENCE_EIGS = [1.0, 0.5]
REFERENCE_GRID = 64
SWEEP = [2.0, 5.0, 10.0, 15.0]

class VerifyContext:
    """
    Shared state of one verification run: the seed,
    sample sizes and lazily built reference objects.

    Every check draws from its own child stream of the
    seed, named by `stream(name)`.
    """
    STREAMS = (
        "gamma_law", "exact_tail", "sweep", "chernoff",
        "tail_asymptote", "c_infinity", "coupling", "determinism",
    )

    def __init__(self,
                 seed: SeedLike,
                 n_conditional: int = 10_000,
                 n_unconditional: int = 100_000,
                 njobs: int = 1) -> None:
        self.seed = seed
        self.n_conditional = int(n_conditional)
        self.n_unconditional = int(n_unconditional)
        self.njobs = int(njobs)

    def stream(self, name: str) -> np.random.SeedSequence:
        return child_sequence(self.seed, self.STREAMS.index(name))

    def mercer(self, eigs: list[float], M: int = REFERENCE_GRID) -> SpectralDecomposition:
        kernel = make_kernel({"family": "mercer-synthetic", "mercer_eigs": eigs})
        return decompose(kernel, build_grid(M))

    @cached_property
    def reference(self) -> SpectralDecomposition:
        return self.mercer(REFERENCE_EIGS)

    @cached_property
    def spectrum(self) -> SpectrumSummary:
        return SpectrumSummary.from_decomposition(self.reference)

    @cached_property
    def sweep(self) -> list[ConditionalEnsemble]:
        """Decomposition-sampler ensembles over the r sweep"""
        ss = self.stream("sweep")
        return [
            sample_conditional_decomposition(
                self.reference, r, self.n_conditional,
                child_sequence(ss, i), njobs=self.njobs
            )
            for i, r in enumerate(SWEEP)
        ]

Check = Callable[[VerifyContext], list[ReportRow]]

class Suite:
    """
    Acceptance suite.
    =================

    Ordered collection of checks run against one
    `VerifyContext`.
    """
    def __init__(self, *funcs: Check) -> None:
        self.funcs = funcs
        for func in self.funcs:
            _check_signature(func)

    def run(self, ctx: VerifyContext) -> AnalysisReport:
        report = AnalysisReport()
        for func in self.funcs:
            name = _name(func)
            with Timer(f"Check {name}"):
                rows = func(ctx)
            report.extend(rows)
            failed = sum(not row.verdict for row in rows)
            logger.info(
                f"{name}: {'PASS' if not failed else f'FAIL ({failed} rows)'}"
            )
        return report

    def write(self, report: AnalysisReport, out: str | Path) -> list[Path]:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        report.to_json(out/"verify.json")
        report.to_text(out/"verify.txt")
        return [out/"verify.json", out/"verify.txt"]

def _name(func: Callable) -> str:
    return getattr(func, "__name__", None) or _name(func.func)

# Signature checker-------------------------------------------------------------
def _check_signature(func) -> None:
    """
    Check if the given function has the correct signature.
    """
    if not callable(func):
        raise TypeError(f"Expected a callable, got {type(func)}")
    sig = signature(func)
    params = list(sig.parameters)
    if not params or params[0] != "ctx":
        raise TypeError(
            f"Expected a function with parameter `ctx` as first argument, "
            f"got {params[0] if params else 'no parameters'}"
        )
    if any(
        p.default is p.empty and p.kind in (p.POSITIONAL_ONLY, p.POSITIONAL_OR_KEYWORD)
        for p in list(sig.parameters.values())[1:]
    ):
        raise TypeError(
            f"All arguments of {_name(func)} except `ctx` must be fixed."
        )
