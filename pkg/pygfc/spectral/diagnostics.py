"""
Smoothness diagnostics for a computed spectrum.

A kernel whose fourth x-derivative is continuous has
eigenvalues decaying faster than n^-5, eigenfunctions
obeying ||phi_n||_inf^2 <= 1 + 2||phi_n''''||_2^(1/4),
and a bounded <x|T_C^(1/2)|x>. These checks estimate
each of those quantities from a decomposition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from ..logger import logger
from ..structs import QuadratureGrid
from .nystrom import SpectralDecomposition, nystrom_interpolate

class DiagnosticsError(ValueError):
    pass

# Smallest grid the fourth-order stencils are used on
MIN_GRID = 64
# Regression needs at least this many resolved modes
MIN_FIT_MODES = 4
# Retained modes required by the diagnostics
MIN_MODES = 12
# Eigenvalues below this fraction of mu_1 are round-off
NOISE_FLOOR = 1e-13
# Required decay exponent
DECAY_EXPONENT = 5.0
# Relative size of the last quarter of the partial
# sums tolerated for a convergent series
CAUCHY_TOL = 0.05

@dataclass(frozen=True, eq=False)
class SmoothnessDiagnostics:
    """
    slope: fitted d(log mu_n)/d(log n)
    fit_range: 1-based (first, last) modes in the fit
    decay_pass: slope below -5
    sup_norms: ||phi_n||_inf on the uniform audit grid
    fourth_norms: ||phi_n''''||_2
    sup_check: per-mode ||phi_n||_inf^2 <= 1 + 2||phi_n''''||^(1/4)
    sup_bound_check: per-mode ||phi_n||_inf <= 1 + sqrt(2)||phi_n''''||^(1/8)
    a: max_n mu_n ||phi_n''''||_2
    partial_sums: of sqrt(mu_n) + 2 a^(1/4) mu_n^(1/4)
    series_converges: last quarter of the partial sums
        is small against the total
    profile_bound: sum_n sqrt(mu_n)(1 + 2||phi_n''''||^(1/4))
    profile_bound_holds: max_x <x|T_C^(1/2)|x> below it
    """
    slope: float
    fit_range: tuple[int, int]
    decay_pass: bool
    sup_norms: np.ndarray
    fourth_norms: np.ndarray
    sup_check: np.ndarray
    sup_bound_check: np.ndarray
    a: float
    partial_sums: np.ndarray
    series_converges: bool
    profile_bound: float
    profile_bound_holds: bool

    @property
    def passed(self) -> bool:
        """
        True if the spectrum looks like that of a
        kernel with four continuous derivatives.
        """
        return (
            self.decay_pass
            and bool(np.all(self.sup_check))
            and bool(np.all(self.sup_bound_check))
            and self.series_converges
            and self.profile_bound_holds
        )

    def as_dict(self) -> dict:
        return {
            "slope": self.slope,
            "fit_range": list(self.fit_range),
            "decay_pass": self.decay_pass,
            "sup_check_pass": bool(np.all(self.sup_check)),
            "sup_bound_check_pass": bool(np.all(self.sup_bound_check)),
            "a": self.a,
            "series_converges": self.series_converges,
            "profile_bound": self.profile_bound,
            "profile_bound_holds": self.profile_bound_holds,
            "passed": self.passed,
        }

def fourth_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """
    Fourth derivative along axis 0 of uniformly spaced
    samples. Interior points use the 5-point centred
    stencil, the two points at each end a 6-point
    one-sided stencil, both second order.
    """
    f = np.asarray(values)
    n = f.shape[0]
    if n < 6:
        raise DiagnosticsError("Need at least 6 points for a fourth derivative.")
    d4 = np.empty_like(f)
    d4[2:-2] = f[:-4] - 4*f[1:-3] + 6*f[2:-2] - 4*f[3:-1] + f[4:]
    one_sided = np.array([3., -14., 26., -24., 11., -2.])
    for i in (0, 1):
        d4[i] = np.tensordot(one_sided, f[i:i+6], axes=(0, 0))
        j = n - 1 - i
        d4[j] = np.tensordot(one_sided, f[j-5:j+1][::-1], axes=(0, 0))
    return d4/h**4

def decay_slope(eigenvalues: np.ndarray) -> tuple[float, tuple[int, int]]:
    """
    Least-squares slope of log(mu_n) against log(n).

    Short spectra are fitted over all resolved modes.
    Long ones over modes N/16..N/4, away from both the
    low modes and the grid-limited high ones.
    """
    mu = np.asarray(eigenvalues, dtype=float)
    resolved = int(np.sum(mu > NOISE_FLOOR*mu[0]))
    if resolved < MIN_FIT_MODES:
        raise DiagnosticsError(
            f"Only {resolved} resolved modes; need {MIN_FIT_MODES} for the decay fit."
        )
    if resolved >= 2*MIN_MODES:
        lo, hi = max(2, resolved//16), resolved//4
    else:
        lo, hi = 1, resolved
    n = np.arange(lo, hi + 1)
    slope, _ = np.polyfit(np.log(n), np.log(mu[lo-1:hi]), 1)
    return float(slope), (int(lo), int(hi))

def smoothness_diagnostics(
    decomp: SpectralDecomposition,
    grid: QuadratureGrid | None = None) -> SmoothnessDiagnostics:
    """
    Decay, sup-norm and series checks for `decomp`.

    Eigenfunctions are carried onto a uniform grid with
    as many points as the quadrature grid by Nyström
    interpolation and differentiated there.
    """
    grid = grid or decomp.grid
    if grid.size < MIN_GRID:
        raise DiagnosticsError(
            f"Grid of {grid.size} nodes is too coarse for fourth-order "
            f"differences; need at least {MIN_GRID}."
        )
    if decomp.n_modes < MIN_MODES:
        raise DiagnosticsError(
            f"Only {decomp.n_modes} modes retained; the diagnostics "
            f"need at least {MIN_MODES}."
        )
    mu = decomp.eigenvalues
    slope, fit_range = decay_slope(mu)

    x = np.linspace(0.0, 1.0, grid.size)
    h = x[1] - x[0]
    phi = nystrom_interpolate(decomp, x)
    d4 = fourth_derivative(phi, h)
    fourth_norms = np.sqrt(trapezoid(np.abs(d4)**2, x, axis=0))
    sup_norms = np.max(np.abs(phi), axis=0)

    slack = 1e-8
    sup_check = sup_norms**2 <= (1 + 2*fourth_norms**0.25)*(1 + slack)
    sup_bound_check = sup_norms <= (1 + math.sqrt(2)*fourth_norms**0.125)*(1 + slack)

    a = float(np.max(mu*fourth_norms))
    terms = np.sqrt(mu) + 2*a**0.25*mu**0.25
    partial_sums = np.cumsum(terms)
    q = (3*mu.size)//4
    block = partial_sums[-1] - (partial_sums[q-1] if q > 0 else 0.0)
    series_converges = bool(block <= CAUCHY_TOL*partial_sums[-1])

    profile_bound = math.fsum((np.sqrt(mu)*(1 + 2*fourth_norms**0.25)).tolist())
    profile_bound_holds = bool(decomp.profile.max() <= profile_bound*(1 + slack))

    diag = SmoothnessDiagnostics(
        slope=slope,
        fit_range=fit_range,
        decay_pass=bool(slope < -DECAY_EXPONENT),
        sup_norms=sup_norms,
        fourth_norms=fourth_norms,
        sup_check=sup_check,
        sup_bound_check=sup_bound_check,
        a=a,
        partial_sums=partial_sums,
        series_converges=series_converges,
        profile_bound=profile_bound,
        profile_bound_holds=profile_bound_holds,
    )
    logger.info(
        f"Smoothness diagnostics: decay slope {slope:.2f} over modes "
        f"{fit_range[0]}..{fit_range[1]}, a={a:.3g}, "
        f"series {'converges' if series_converges else 'does not converge'}."
    )
    return diag
