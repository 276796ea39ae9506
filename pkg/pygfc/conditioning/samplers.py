"""
Samplers for the conditional law of the field
given ||phi||^2 > r.

Rejection
---------
Unconditional draws are kept iff their squared norm
exceeds r. Only accepted draws are synthesized.

Decomposition
-------------
Exact weighted sampler built from the split of the
squared norm into the independent parts

    V = ||phi_par||^2 ~ Gamma(g_1, kappa_1)
    U = ||phi_perp||^2.

The orthogonal coefficients are drawn from the law of
U tilted by exp(U/kappa_1), under which mode n has
variance 1/(1 - mu_n/kappa_1) and the normalizer is

    Z = prod_{n perp} (1 - mu_n/kappa_1)^-1.

Each draw carries the weight

    w(U) = exp(-U/kappa_1) * Q(g_1, max(0, r-U)/kappa_1)

with Q the regularized upper incomplete gamma function,
so 0 <= w <= 1 and P(||phi||^2 > r) = Z * E_tilted[w].
V is then drawn from Gamma(g_1, kappa_1) truncated to
(max(0, r-U), inf) and spread uniformly over the
complex g_1-sphere.
"""
from __future__ import annotations

import math

import numpy as np
import pandas as pd
from scipy import special

from ..io import SampleColumns
from ..logger import logger
from ..sampling import CoefficientStream, synthesize_batch
from ..spectral import SpectralDecomposition
from ..structs import Estimate, FieldKind
from ..utils import CHUNK_SIZE, SeedLike, Timer, chunk_sizes, log1m_prod, pool_map
from .ensemble import ConditionalEnsemble

class ConditioningError(ValueError):
    pass

class BudgetExhausted(ConditioningError):
    """
    Raised when the rejection sampler uses up its
    attempt budget before collecting enough samples.
    """
    def __init__(self, r: float, attempts: int, accepted: int, n_target: int) -> None:
        self.r = r
        self.attempts = attempts
        self.accepted = accepted
        self.n_target = n_target
        super().__init__(
            f"Rejection budget of {attempts:_} attempts exhausted at r={r:g} "
            f"with {accepted}/{n_target} acceptances. Use the decomposition sampler."
        )

# Defaults
REJECTION_BUDGET = 10_000_000
# Chunks evaluated between two stopping checks
# of the rejection sampler.
ROUND_CHUNKS = 8
# Upper limit of lower/kappa_1 for the truncated Gamma.
# Beyond, Q(g, x) underflows double precision.
UNDERFLOW_LIMIT = 700.0

_EPS = np.finfo(float).eps

def truncated_gamma_sample(g1: int,
                           kappa1: float,
                           lower: float | np.ndarray,
                           rng: np.random.Generator,
                           size: int | None = None) -> float | np.ndarray:
    """
    Draw from Gamma(g1, kappa1) conditioned to exceed
    `lower` by inverting the regularized upper incomplete
    gamma function:

        V = kappa1 * Qinv(g1, u * Q(g1, lower/kappa1)),

    u uniform on (0, 1]. `lower` may be an array, in
    which case one value is drawn per entry.
    """
    lower = np.asarray(lower, dtype=float)
    if np.any(lower < 0):
        raise ConditioningError("Truncation point must be non-negative.")
    x = lower/kappa1
    if np.any(x > UNDERFLOW_LIMIT):
        raise ConditioningError(
            f"Truncation point lower/kappa1={float(np.max(x)):.1f} lies in the "
            f"underflow region (> {UNDERFLOW_LIMIT:g})."
        )
    shape = lower.shape if size is None else (size,)
    u = 1.0 - rng.random(shape)
    q = special.gammaincc(g1, x)
    v = kappa1*special.gammainccinv(g1, u*q)
    v = np.maximum(v, lower)
    if v.ndim == 0:
        return float(v)
    return v

def _check_threshold(r: float) -> float:
    r = float(r)
    if not math.isfinite(r) or r < 0:
        raise ConditioningError(f"Threshold r must be finite and non-negative, got {r}.")
    return r

# Rejection ------------------------------------------------------------------
def _rejection_chunk(args: tuple) -> tuple[int, pd.DataFrame]:
    decomp, r, seed, index, size = args
    stream = CoefficientStream(seed, index)
    S = stream.normal((size, decomp.n_modes))
    norm2 = (np.abs(S)**2) @ decomp.eigenvalues
    keep = norm2 > r
    return size, synthesize_batch(decomp, S[keep])

def sample_conditional_rejection(decomp: SpectralDecomposition,
                                 r: float,
                                 n_target: int,
                                 seed: SeedLike,
                                 budget: int = REJECTION_BUDGET,
                                 njobs: int = 1,
                                 chunk_size: int = CHUNK_SIZE) -> ConditionalEnsemble:
    """
    Plain rejection: synthesize unconditional draws and
    keep those with ||phi||^2 > r until `n_target` are
    accepted or `budget` attempts are used.

    Chunks are processed in rounds of ROUND_CHUNKS, so the
    number of attempts only depends on the seed. All draws
    of the processed chunks count as attempts and
    P(||phi||^2 > r) is estimated as acceptances/attempts.
    """
    r = _check_threshold(r)
    if n_target < 1:
        raise ConditioningError(f"Target sample count must be positive, got {n_target}.")
    sizes = chunk_sizes(int(budget), chunk_size)
    attempts, accepted = 0, 0
    frames: list[pd.DataFrame] = []
    with Timer(f"Rejection sampling at r={r:g}"):
        for start in range(0, len(sizes), ROUND_CHUNKS):
            jobs = [
                (decomp, r, seed, k, sizes[k])
                for k in range(start, min(start + ROUND_CHUNKS, len(sizes)))
            ]
            for drawn, frame in pool_map(_rejection_chunk, jobs, njobs):
                attempts += drawn
                accepted += len(frame)
                frames.append(frame)
            logger.debug(
                f"r={r:g}: {accepted} accepted out of {attempts:_} attempts"
            )
            if accepted >= n_target:
                break
    if accepted < n_target:
        raise BudgetExhausted(r, attempts, accepted, n_target)

    frame = pd.concat(frames, ignore_index=True).iloc[:n_target].copy()
    frame[SampleColumns.SAMPLE_ID.value] = np.arange(n_target, dtype=np.int64)
    p = accepted/attempts
    ensemble = ConditionalEnsemble(
        r=r,
        method="rejection",
        frame=frame.reset_index(drop=True),
        p_event=Estimate(p, math.sqrt(p*(1 - p)/attempts)),
        kappa1=decomp.kappa1,
        attempts=attempts,
        extra={"accepted": accepted},
    )
    logger.info(
        f"Rejection at r={r:g}: acceptance rate {accepted/attempts:.4e} "
        f"over {attempts:_} attempts."
    )
    return ensemble

# Decomposition --------------------------------------------------------------
def tilt_normalizer(lam: np.ndarray, g1: int) -> float:
    """
    Z = prod_{n > g1} (1 - lam_n/lam_1)^-1
    """
    lam = np.asarray(lam, dtype=float)
    return math.exp(-log1m_prod(lam[g1:]/lam[0]))

def _tilted_draw(stream: CoefficientStream,
                 lam: np.ndarray,
                 g1: int,
                 r: float,
                 size: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Coefficient rows conditioned on sum |s_n|^2 lam_n > r
    and their importance weights, following the tilted
    decomposition above. Draw order: orthogonal
    coefficients, truncated Gamma uniforms, parallel
    directions.
    """
    kappa1 = float(lam[0])
    perp = lam[g1:]
    if perp.size:
        S_perp = stream.normal((size, perp.size), 1.0/(1.0 - perp/kappa1))
        U = (np.abs(S_perp)**2) @ perp
    else:
        S_perp = np.zeros((size, 0), dtype=complex)
        U = np.zeros(size)
    lower = np.maximum(0.0, r - U)
    w = np.exp(-U/kappa1)*special.gammaincc(g1, lower/kappa1)
    if not perp.size:
        w = np.ones(size)
    # Margin so that U + V > r survives rounding
    lower = np.where(lower > 0, lower + 8*_EPS*r, lower)
    V = truncated_gamma_sample(g1, kappa1, lower, stream.rng)
    z = stream.normal((size, g1))
    z /= np.linalg.norm(z, axis=1)[:, None]
    # Merged near-degenerate modes carry mu_n slightly below
    # kappa_1; scale so that sum_par |s_n|^2 mu_n = V exactly.
    S_par = z*np.sqrt(V/((np.abs(z)**2) @ lam[:g1]))[:, None]
    return np.hstack([S_par, S_perp]), w

def _decomposition_chunk(args: tuple) -> pd.DataFrame:
    decomp, lam, r, seed, index, size, start = args
    stream = CoefficientStream(seed, index)
    S, w = _tilted_draw(stream, lam, decomp.g1, r, size)
    return synthesize_batch(decomp, S, start_id=start, weights=w)

def _check_gap(decomp: SpectralDecomposition) -> None:
    if not decomp.has_gap:
        raise ConditioningError(
            f"No spectral gap: kappa2={decomp.groups[1].kappa:.6g} >= "
            f"kappa1={decomp.kappa1:.6g}."
        )

def _run_tilted(decomp: SpectralDecomposition,
                lam: np.ndarray,
                r: float,
                n: int,
                seed: SeedLike,
                njobs: int,
                chunk_size: int) -> tuple[pd.DataFrame, Estimate]:
    _check_gap(decomp)
    if n < 1:
        raise ConditioningError(f"Sample count must be positive, got {n}.")
    sizes = chunk_sizes(n, chunk_size)
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int)
    jobs = [
        (decomp, lam, r, seed, k, size, int(start))
        for k, (size, start) in enumerate(zip(sizes, starts))
    ]
    frame = pd.concat(pool_map(_decomposition_chunk, jobs, njobs), ignore_index=True)
    g1 = decomp.g1
    if g1 == decomp.n_modes:
        # No orthogonal modes: unit weights and the
        # event probability is the Gamma tail itself.
        return frame, Estimate(float(special.gammaincc(g1, r/lam[0])), 0.0)
    Z = tilt_normalizer(lam, g1)
    w = frame[SampleColumns.WEIGHT.value].to_numpy()
    sd = float(np.std(w, ddof=1)) if n > 1 else 0.0
    return frame, Estimate(Z*float(np.mean(w)), Z*sd/math.sqrt(n))

def sample_conditional_decomposition(decomp: SpectralDecomposition,
                                     r: float,
                                     n: int,
                                     seed: SeedLike,
                                     njobs: int = 1,
                                     chunk_size: int = CHUNK_SIZE) -> ConditionalEnsemble:
    """
    Exact weighted sampler of phi given ||phi||^2 > r.
    Requires r > 0 and a strict gap kappa_2 < kappa_1.
    """
    r = _check_threshold(r)
    if r == 0:
        raise ConditioningError("The decomposition sampler needs r > 0.")
    with Timer(f"Decomposition sampling at r={r:g}"):
        frame, p = _run_tilted(decomp, decomp.eigenvalues, r, n, seed, njobs, chunk_size)
    ensemble = ConditionalEnsemble(
        r=r,
        method="decomposition",
        frame=frame,
        p_event=p,
        kappa1=decomp.kappa1,
        attempts=n,
    )
    _check_event(ensemble)
    logger.info(
        f"Decomposition at r={r:g}: P={p.value:.4e} (se {p.se:.1e}), "
        f"ESS/n={ensemble.ess/n:.3f}."
    )
    return ensemble

def psi_conditional(decomp: SpectralDecomposition,
                    t: float,
                    n: int,
                    seed: SeedLike,
                    njobs: int = 1,
                    chunk_size: int = CHUNK_SIZE) -> ConditionalEnsemble:
    """
    Weighted sampler of the coupled fields given
    ||psi||^2 > t. ||psi||^2 = sum_n |s_n|^2 nu_n with
    nu_n = (mu_n/kappa_1)^(1/2), so the decomposition
    sampler runs on the nu spectrum (top value 1, same
    multiplicity g_1). `t` is in psi units, r/kappa_1.
    """
    t = _check_threshold(t)
    if t == 0:
        raise ConditioningError("The psi sampler needs t > 0.")
    nu = np.sqrt(decomp.eigenvalues/decomp.kappa1)
    with Timer(f"Psi-field sampling at t={t:g}"):
        frame, p = _run_tilted(decomp, nu, t, n, seed, njobs, chunk_size)
    ensemble = ConditionalEnsemble(
        r=t,
        method="decomposition",
        frame=frame,
        p_event=p,
        kappa1=decomp.kappa1,
        attempts=n,
        kind=FieldKind.PSI,
    )
    _check_event(ensemble)
    logger.info(f"Psi-field at t={t:g}: P={p.value:.4e} (se {p.se:.1e}).")
    return ensemble

def _check_event(ensemble: ConditionalEnsemble) -> None:
    values = ensemble.frame[ensemble.event_column].to_numpy()
    if np.any(values <= ensemble.r):
        raise ConditioningError(
            f"{int(np.sum(values <= ensemble.r))} sample(s) violate the "
            f"conditioning event at r={ensemble.r:g}."
        )
