"""
Exact spectra used as oracles for the numerical eigensolver.

For the exponential kernel sigma2*exp(-|x-y|/ell) on an interval
of half-length a = 1/2, with c = 1/ell, the eigenvalues are

    mu = sigma2 * 2c / (c^2 + w^2)

where w runs over the roots of

    c cos(w a) - w sin(w a) = 0   (even eigenfunctions)
    w cos(w a) + c sin(w a) = 0   (odd eigenfunctions)

Even roots lie in [2k pi, 2k pi + pi], odd roots in
[2k pi + pi, 2k pi + 2 pi], so they interleave and a
single bracketed solve per interval is enough.
"""
import numpy as np
from scipy.optimize import brentq

HALF_LENGTH = 0.5

def _even(w: float, c: float) -> float:
    return c*np.cos(w*HALF_LENGTH) - w*np.sin(w*HALF_LENGTH)

def _odd(w: float, c: float) -> float:
    return w*np.cos(w*HALF_LENGTH) + c*np.sin(w*HALF_LENGTH)

def exponential_frequencies(ell: float, n: int) -> np.ndarray:
    """
    First `n` frequencies w solving the exponential
    kernel's eigencondition, ascending.
    """
    if n < 1:
        raise ValueError(f"Need n >= 1, got {n}.")
    c = 1.0/ell
    period = 2*np.pi/(2*HALF_LENGTH)  # = 2 pi for the unit interval
    out = []
    k = 0
    while len(out) < n:
        lo = k*period
        out.append(brentq(_even, lo, lo + period/2, args=(c,), xtol=1e-14))
        if len(out) < n:
            out.append(brentq(_odd, lo + period/2, lo + period, args=(c,), xtol=1e-14))
        k += 1
    return np.asarray(out)

def exponential_oracle(ell: float, sigma2: float, n: int) -> np.ndarray:
    """
    First `n` exact eigenvalues (descending) of the
    exponential kernel on [0,1].
    """
    c = 1.0/ell
    w = exponential_frequencies(ell, n)
    return sigma2*2*c/(c**2 + w**2)
