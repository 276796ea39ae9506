"""
Covariance kernels C(x,y) on the unit interval.

Three families are provided:

- ``exponential``: sigma2 * exp(-|x-y|/ell), continuous but
  not differentiable on the diagonal.
- ``squared-exponential``: sigma2 * exp(-(x-y)^2/(2 ell^2)),
  infinitely differentiable.
- ``mercer-synthetic``: sum_n mu_n e_n(x) conj(e_n(y)) over a
  declared list of eigenvalues and complex Fourier modes
  e_k(x) = exp(2 pi i k x). The spectrum is known exactly,
  which makes these kernels the oracle for everything
  downstream.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping

import numpy as np
from scipy import special

from ..logger import logger

class KernelError(ValueError):
    """
    Invalid kernel parameters or evaluation points.
    `key` names the offending specification entry.
    """
    def __init__(self, message: str, key: str | None = None) -> None:
        super().__init__(message)
        self.key = key

class KernelFamily(Enum):
    __order__ = "EXPONENTIAL SQUARED_EXPONENTIAL MERCER"
    EXPONENTIAL = "exponential"
    SQUARED_EXPONENTIAL = "squared-exponential"
    MERCER = "mercer-synthetic"

    @classmethod
    def from_value(cls, value: str) -> KernelFamily:
        """
        Return the family for a configuration string.
        ``mercer`` is accepted as a short alias.
        """
        if value == "mercer":
            return cls.MERCER
        for fam in cls:
            if fam.value == value:
                return fam
        raise KernelError(
            f"Unknown kernel family {value!r}. "
            f"Expected one of {[f.value for f in cls]}.", key="family"
        )

def fourier_indices(n: int) -> tuple[int, ...]:
    """
    Frequencies of the first `n` Fourier modes in
    the order 0, 1, -1, 2, -2, ...
    """
    out = [0]
    k = 1
    while len(out) < n:
        out.append(k)
        if len(out) < n:
            out.append(-k)
        k += 1
    return tuple(out[:n])

def fourier_mode(k: int, x: np.ndarray) -> np.ndarray:
    """
    Complex Fourier mode exp(2 pi i k x), orthonormal on [0,1].
    """
    return np.exp(2j*np.pi*k*np.asarray(x, dtype=float))

@dataclass(frozen=True)
class Kernel:
    """
    Immutable covariance kernel on [0,1]^2.

    family: kernel family
    ell: length scale (ignored by mercer-synthetic kernels)
    sigma2: variance (ignored by mercer-synthetic kernels,
        whose scale is carried by the eigenvalues)
    mercer_eigs: eigenvalues of a mercer-synthetic kernel
    mercer_basis: Fourier frequency of each eigenvalue
    smoothness: number of continuous x-derivatives,
        ``math.inf`` for smooth kernels
    """
    family: KernelFamily
    ell: float = 1.0
    sigma2: float = 1.0
    mercer_eigs: tuple[float, ...] = field(default_factory=tuple)
    mercer_basis: tuple[int, ...] = field(default_factory=tuple)
    smoothness: float = 0

    @property
    def is_complex(self) -> bool:
        return self.family is KernelFamily.MERCER and any(k != 0 for k in self.mercer_basis)

    @property
    def kinked(self) -> bool:
        """C is not differentiable on the diagonal"""
        return self.smoothness < 1

    @property
    def scale(self) -> float:
        """
        Variance scale used for positive semi-definiteness
        tolerances.
        """
        if self.family is KernelFamily.MERCER:
            return max(self.mercer_eigs, default=0.0)
        return self.sigma2

    def gram(self, x: np.ndarray, y: np.ndarray | None = None) -> np.ndarray:
        """
        Matrix C(x_i, y_j). Points are not range-checked;
        use `eval_kernel` for validated scalar evaluation.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = x if y is None else np.atleast_1d(np.asarray(y, dtype=float))
        match self.family:
            case KernelFamily.EXPONENTIAL:
                d = np.abs(x[:, None] - y[None, :])
                return self.sigma2*np.exp(-d/self.ell)
            case KernelFamily.SQUARED_EXPONENTIAL:
                d = x[:, None] - y[None, :]
                return self.sigma2*np.exp(-d**2/(2*self.ell**2))
            case KernelFamily.MERCER:
                ex = np.stack([fourier_mode(k, x) for k in self.mercer_basis], axis=1)
                ey = np.stack([fourier_mode(k, y) for k in self.mercer_basis], axis=1)
                mu = np.asarray(self.mercer_eigs)
                return (ex*mu) @ ey.conj().T
        raise KernelError(f"Unsupported kernel family {self.family}")

    def row_integral(self, x: np.ndarray) -> np.ndarray:
        """
        int_0^1 C(x,y) dy in closed form.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        match self.family:
            case KernelFamily.EXPONENTIAL:
                ell = self.ell
                return self.sigma2*ell*(2 - np.exp(-x/ell) - np.exp(-(1 - x)/ell))
            case KernelFamily.SQUARED_EXPONENTIAL:
                s = math.sqrt(2)*self.ell
                return self.sigma2*self.ell*math.sqrt(math.pi/2)*(
                    special.erf(x/s) + special.erf((1 - x)/s)
                )
            case KernelFamily.MERCER:
                # Only the constant mode survives the integral
                mu0 = sum(mu for mu, k in zip(self.mercer_eigs, self.mercer_basis) if k == 0)
                return np.full(x.shape, float(mu0))
        raise KernelError(f"Unsupported kernel family {self.family}")

    def diagonal(self, x: np.ndarray) -> np.ndarray:
        """
        C(x,x) at the given points (real).
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.family is KernelFamily.MERCER:
            # |e_k(x)|^2 = 1
            return np.full(x.shape, math.fsum(self.mercer_eigs))
        return np.full(x.shape, self.sigma2)

    def as_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"family": self.family.value}
        if self.family is KernelFamily.MERCER:
            out["mercer_eigs"] = list(self.mercer_eigs)
            out["mercer_basis"] = list(self.mercer_basis)
        else:
            out["ell"] = self.ell
            out["sigma2"] = self.sigma2
        return out

    def __repr__(self) -> str:
        if self.family is KernelFamily.MERCER:
            return f"<Kernel({self.family.value}, mu={list(self.mercer_eigs)})>"
        return (
            f"<Kernel({self.family.value}, "
            f"ell={self.ell}, sigma2={self.sigma2})>"
        )

def _positive(spec: Mapping[str, Any], key: str, default: float) -> float:
    value = spec.get(key, default)
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise KernelError(f"Kernel parameter '{key}' must be a number, got {value!r}.", key)
    if not math.isfinite(value) or value <= 0:
        raise KernelError(f"Kernel parameter '{key}' must be strictly positive, got {value}.", key)
    return value

def _mercer_list(spec: Mapping[str, Any]) -> tuple[tuple[float, ...], tuple[int, ...]]:
    eigs = spec.get("mercer_eigs")
    if not eigs:
        raise KernelError("A mercer-synthetic kernel needs a non-empty 'mercer_eigs' list.", "mercer_eigs")
    eigs = tuple(float(e) for e in eigs)
    if not all(math.isfinite(e) for e in eigs):
        raise KernelError("'mercer_eigs' must be finite.", "mercer_eigs")
    if any(e < 0 for e in eigs):
        raise KernelError(f"'mercer_eigs' must be non-negative, got {list(eigs)}.", "mercer_eigs")
    if any(b > a for a, b in zip(eigs, eigs[1:])):
        raise KernelError(f"'mercer_eigs' must be non-increasing, got {list(eigs)}.", "mercer_eigs")
    basis = spec.get("mercer_basis")
    if basis is None:
        basis = fourier_indices(len(eigs))
    basis = tuple(int(k) for k in basis)
    if len(basis) != len(eigs):
        raise KernelError(
            f"'mercer_basis' has {len(basis)} entries for {len(eigs)} eigenvalues.",
            "mercer_basis"
        )
    if len(set(basis)) != len(basis):
        raise KernelError("'mercer_basis' frequencies must be distinct.", "mercer_basis")
    return eigs, basis

def make_kernel(spec: Mapping[str, Any]) -> Kernel:
    """
    Build a `Kernel` from a configuration record like
    ``{"family": "exponential", "ell": 1.0, "sigma2": 1.0}``
    or ``{"family": "mercer-synthetic", "mercer_eigs": [1.0, 0.5]}``.
    """
    if "family" not in spec:
        raise KernelError("Kernel specification lacks the 'family' key.", "family")
    family = KernelFamily.from_value(spec["family"])
    ell = _positive(spec, "ell", 1.0)
    sigma2 = _positive(spec, "sigma2", 1.0)
    match family:
        case KernelFamily.EXPONENTIAL:
            kernel = Kernel(family, ell, sigma2, smoothness=0)
        case KernelFamily.SQUARED_EXPONENTIAL:
            kernel = Kernel(family, ell, sigma2, smoothness=math.inf)
        case KernelFamily.MERCER:
            eigs, basis = _mercer_list(spec)
            kernel = Kernel(
                family, ell, sigma2,
                mercer_eigs=eigs,
                mercer_basis=basis,
                smoothness=math.inf
            )
    logger.debug(f"Constructed {kernel!r}")
    return kernel

def eval_kernel(kernel: Kernel, x: float, y: float) -> complex | float:
    """
    Evaluate C(x,y) for x, y in [0,1].
    Real kernels return a float, complex kernels a complex.
    """
    for name, p in (("x", x), ("y", y)):
        if not 0.0 <= float(p) <= 1.0:
            raise KernelError(f"Point {name}={p} lies outside [0,1].")
    value = kernel.gram(np.array([x]), np.array([y]))[0, 0]
    if x == y:
        return float(np.real(value))
    if np.iscomplexobj(value) and kernel.is_complex:
        return complex(value)
    return float(np.real(value))
