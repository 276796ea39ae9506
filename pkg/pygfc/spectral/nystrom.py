"""
Nyström discretization of the covariance operator

    (T_C f)(x) = int_0^1 C(x,y) f(y) dy

on a Gauss-Legendre grid. The weighted matrix
sqrt(w_i) C(x_i,x_j) sqrt(w_j) is Hermitian, so its
eigenvectors v_n give grid-orthonormal eigenfunctions
phi_n(x_i) = v_n[i]/sqrt(w_i).

Kernels with a kink on the diagonal (the exponential
family) lose accuracy under plain Gauss-Legendre
quadrature. For those the row integral is split as

    int C(x,y) f(y) dy = int C(x,y)(f(y) - f(x)) dy + f(x) c(x)

with c(x) = int_0^1 C(x,y) dy in closed form. Discretized,
this adds the row defect d_i = c(x_i) - sum_j w_j C(x_i,x_j)
to the diagonal, which keeps the weighted matrix Hermitian.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.linalg

from ..kernels import Kernel
from ..logger import logger
from ..structs import (
    DegeneracyGroup, Eigenvalues, ModeTable,
    QuadratureGrid, MAX_GRID_SIZE
)

class SpectralError(RuntimeError):
    pass

# Defaults
TRUNCATION_TOL = 1e-10
DEGENERACY_TOL = 1e-8

def build_grid(M: int) -> QuadratureGrid:
    """
    Gauss-Legendre rule with `M` nodes mapped
    from [-1,1] to [0,1]. Weights sum to one.
    """
    if isinstance(M, bool) or int(M) != M or M < 2:
        raise SpectralError(f"Grid size must be an integer >= 2, got {M}.")
    if M > MAX_GRID_SIZE:
        raise SpectralError(f"Grid size {M} exceeds the cap of {MAX_GRID_SIZE}.")
    t, w = np.polynomial.legendre.leggauss(int(M))
    nodes = (t + 1.0)/2.0
    weights = w/2.0
    # Re-normalize away the last ulp of the
    # Legendre weight computation.
    weights = weights/math.fsum(weights)
    return QuadratureGrid(nodes=nodes, weights=weights)

@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """
    Truncated spectral decomposition of T_C.

    eigenvalues: mu_1 >= ... >= mu_N > 0
    modes: phi_n(x_i), shape (M, N), orthonormal
        under the grid weights
    groups: distinct eigenvalues kappa_j with
        multiplicities g_j, strictly decreasing
    trace: sum of retained eigenvalues
    total_trace: sum of all non-negative eigenvalues
        of the discretized operator
    sqrt_trace: sum of sqrt(mu_n) over retained modes
    profile: <x|T_C^(1/2)|x> at the nodes
    B: kappa_1^(-1/4) * max_x profile(x)^(1/2)
    discarded_mass: sum of eigenvalues beyond N
    """
    kernel: Kernel
    grid: QuadratureGrid
    eigenvalues: Eigenvalues
    modes: ModeTable
    groups: tuple[DegeneracyGroup, ...]
    trace: float
    total_trace: float
    sqrt_trace: float
    profile: np.ndarray
    B: float
    discarded_mass: float
    truncation_tol: float = TRUNCATION_TOL
    degeneracy_tol: float = DEGENERACY_TOL
    extra: dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def n_modes(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def kappa1(self) -> float:
        return self.groups[0].kappa

    @property
    def g1(self) -> int:
        return self.groups[0].g

    @property
    def parallel(self) -> slice:
        """Mode indices spanning the kappa_1 eigenspace"""
        return slice(0, self.g1)

    @property
    def perpendicular(self) -> slice:
        """Mode indices orthogonal to the kappa_1 eigenspace"""
        return slice(self.g1, self.n_modes)

    @property
    def has_gap(self) -> bool:
        return len(self.groups) == 1 or self.groups[1].kappa < self.kappa1

    def __repr__(self) -> str:
        return (
            f"<SpectralDecomposition(M={self.grid.size}, N={self.n_modes}, "
            f"kappa1={self.kappa1:.6g}, g1={self.g1}, B={self.B:.6g})>"
        )

def row_defect(kernel: Kernel, grid: QuadratureGrid, x: np.ndarray) -> np.ndarray:
    """
    c(x) - sum_j w_j C(x, x_j): quadrature error of the
    row integral of C at the points `x`.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    approx = kernel.gram(x, grid.nodes) @ grid.weights
    return kernel.row_integral(x) - np.real(approx)

def _fix_phase(vecs: np.ndarray) -> np.ndarray:
    """
    Rotate each column so that its entry of largest
    modulus is real and positive.
    """
    idx = np.argmax(np.abs(vecs), axis=0)
    pivots = vecs[idx, np.arange(vecs.shape[1])]
    return vecs*(np.abs(pivots)/pivots)[None, :]

def _sqrt_profile(eigenvalues: np.ndarray, modes: np.ndarray) -> tuple[np.ndarray, float]:
    profile = (np.abs(modes)**2) @ np.sqrt(eigenvalues)
    kappa1 = float(eigenvalues[0])
    B = kappa1**-0.25*float(np.sqrt(profile.max()))
    return profile, B

def group_degeneracies(
    decomp: SpectralDecomposition | np.ndarray,
    rel_tol: float = DEGENERACY_TOL) -> tuple[DegeneracyGroup, ...]:
    """
    Merge consecutive eigenvalues whose difference is
    at most rel_tol*mu_1 into one group. The group value
    kappa_j is its largest member.

    Gaps between groups that fall within ten times the
    tolerance are reported as warnings, since the grouping
    is ambiguous there.
    """
    if not 0 < rel_tol < 1e-3:
        raise SpectralError(f"Degeneracy tolerance must lie in (0, 1e-3), got {rel_tol}.")
    mu = np.asarray(getattr(decomp, "eigenvalues", decomp), dtype=float)
    if mu.size == 0:
        raise SpectralError("Cannot group an empty spectrum.")
    tol = rel_tol*mu[0]
    groups: list[list[int]] = [[0]]
    ambiguous: list[tuple[int, float]] = []
    for n in range(1, mu.size):
        gap = abs(mu[n-1] - mu[n])
        if gap <= tol:
            groups[-1].append(n)
            continue
        if gap <= 10*tol:
            ambiguous.append((n, gap))
        groups.append([n])
    if ambiguous:
        n, gap = ambiguous[0]
        logger.warning(
            f"{len(ambiguous)} eigenvalue gap(s) lie within 10x the degeneracy "
            f"tolerance ({tol:.3e}), first between modes {n} and {n+1} "
            f"(gap {gap:.3e}). Grouping may be ambiguous."
        )
    return tuple(
        DegeneracyGroup(kappa=float(mu[g[0]]), g=len(g), members=tuple(g))
        for g in groups
    )

def decompose(
    kernel: Kernel,
    grid: QuadratureGrid,
    truncation_tol: float = TRUNCATION_TOL,
    degeneracy_tol: float = DEGENERACY_TOL) -> SpectralDecomposition:
    """
    Solve the discretized eigenproblem of T_C and keep
    the smallest number N of modes whose discarded mass
    sum_{n>N} mu_n is at most truncation_tol * sum_n mu_n.
    Negative eigenvalues from round-off are clamped to zero
    and never retained.
    """
    if not 0 < truncation_tol < 1:
        raise SpectralError(f"Truncation tolerance must lie in (0,1), got {truncation_tol}.")
    sw = np.sqrt(grid.weights)
    G = kernel.gram(grid.nodes)
    A = sw[:, None]*G*sw[None, :]
    A = (A + A.conj().T)/2
    subtracted = kernel.kinked
    if subtracted:
        A[np.diag_indices_from(A)] += row_defect(kernel, grid, grid.nodes)
    try:
        vals, vecs = scipy.linalg.eigh(A)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise SpectralError(f"Eigensolver did not converge: {e}") from e
    # Descending order
    vals = vals[::-1]
    vecs = vecs[:, ::-1]
    n_negative = int(np.sum(vals < 0))
    vals = np.where(vals < 0, 0.0, vals)
    total = math.fsum(vals.tolist())
    if not total > 0:
        raise SpectralError("The discretized covariance has an all-zero spectrum.")

    # tail[i] = sum of eigenvalues after index i
    tail = np.append(np.cumsum(vals[::-1])[::-1][1:], 0.0)
    n_positive = int(np.sum(vals > 0))
    ok = np.flatnonzero(tail[:n_positive] <= truncation_tol*total)
    N = int(ok[0]) + 1 if ok.size else n_positive

    eigenvalues = vals[:N].copy()
    modes = _fix_phase(vecs[:, :N].astype(complex))/sw[:, None]
    groups = group_degeneracies(eigenvalues, degeneracy_tol)
    profile, B = _sqrt_profile(eigenvalues, modes)

    decomp = SpectralDecomposition(
        kernel=kernel,
        grid=grid,
        eigenvalues=eigenvalues,
        modes=modes,
        groups=groups,
        trace=math.fsum(eigenvalues.tolist()),
        total_trace=total,
        sqrt_trace=math.fsum(np.sqrt(eigenvalues).tolist()),
        profile=profile,
        B=B,
        discarded_mass=float(tail[N-1]),
        truncation_tol=truncation_tol,
        degeneracy_tol=degeneracy_tol,
        extra={"n_clamped": n_negative, "subtracted": subtracted},
    )
    logger.info(
        f"Nyström decomposition on M={grid.size} nodes: retained N={N} modes, "
        f"{len(groups)} distinct eigenvalues, kappa1={decomp.kappa1:.6g} "
        f"(g1={decomp.g1}), discarded mass {decomp.discarded_mass:.2e}."
    )
    if n_negative:
        logger.debug(f"Clamped {n_negative} negative eigenvalues to zero.")
    return decomp

def tc_sqrt_profile(decomp: SpectralDecomposition) -> tuple[np.ndarray, float]:
    """
    <x|T_C^(1/2)|x> = sum_n sqrt(mu_n)|phi_n(x)|^2 at the
    grid nodes, and the constant
    B = kappa_1^(-1/4) max_x <x|T_C^(1/2)|x>^(1/2).
    """
    return _sqrt_profile(decomp.eigenvalues, decomp.modes)

def nystrom_interpolate(decomp: SpectralDecomposition, x: np.ndarray) -> np.ndarray:
    """
    Eigenfunctions at arbitrary points of [0,1] via

        phi_n(x) = mu_n^-1 sum_j w_j C(x, x_j) phi_n(x_j).

    Kinked kernels add the subtracted term d(x) phi_n(x),
    with phi_n(x) linearly interpolated between nodes, so
    the node values are reproduced exactly.

    Returns an array of shape (len(x), N).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    Cx = decomp.kernel.gram(x, decomp.grid.nodes)
    values = Cx @ (decomp.grid.weights[:, None]*decomp.modes)
    if decomp.extra.get("subtracted"):
        nodes = decomp.grid.nodes
        near = np.stack([
            np.interp(x, nodes, m.real) + 1j*np.interp(x, nodes, m.imag)
            for m in decomp.modes.T
        ], axis=1)
        values = values + row_defect(decomp.kernel, decomp.grid, x)[:, None]*near
    return values/decomp.eigenvalues[None, :]

def reconstruct_kernel(decomp: SpectralDecomposition) -> np.ndarray:
    """
    sum_n mu_n phi_n(x_i) conj(phi_n(x_j)) on the grid.
    For kinked kernels this includes the diagonal
    row defect divided by the weights.
    """
    return (decomp.modes*decomp.eigenvalues) @ decomp.modes.conj().T

def reconstruction_error(decomp: SpectralDecomposition) -> float:
    """
    Relative Frobenius error of the truncated
    expansion against the kernel's Gram matrix, with
    the row defect on the diagonal for kinked kernels.
    """
    grid = decomp.grid
    G = decomp.kernel.gram(grid.nodes)
    if decomp.extra.get("subtracted"):
        G = G + np.diag(row_defect(decomp.kernel, grid, grid.nodes)/grid.weights)
    return float(
        np.linalg.norm(reconstruct_kernel(decomp) - G)/np.linalg.norm(G)
    )

def trace_error(decomp: SpectralDecomposition) -> float:
    """
    Relative gap between the retained trace sum_n mu_n
    and the quadrature of C(x,x). For kinked kernels the
    row defect is part of the discretized diagonal; its
    sum is minus the mass of the modes the grid cannot
    resolve.
    """
    grid = decomp.grid
    target = float(grid.integrate(np.real(decomp.kernel.diagonal(grid.nodes))))
    if decomp.extra.get("subtracted"):
        target += math.fsum(row_defect(decomp.kernel, grid, grid.nodes).tolist())
    return abs(decomp.trace - target)/target

def gram_error(decomp: SpectralDecomposition) -> float:
    """
    Largest entry of |Phi^* W Phi - I|.
    """
    W = decomp.grid.weights[:, None]
    gram = decomp.modes.conj().T @ (W*decomp.modes)
    return float(np.max(np.abs(gram - np.eye(decomp.n_modes))))

def export_spectrum(decomp: SpectralDecomposition) -> dict[str, Any]:
    """
    JSON-ready description of the decomposition.
    """
    return {
        "kernel": decomp.kernel.as_dict(),
        "eigenvalues": decomp.eigenvalues.tolist(),
        "groups": [g.as_dict() for g in decomp.groups],
        "B": decomp.B,
        "trace": decomp.trace,
        "total_trace": decomp.total_trace,
        "sqrt_trace": decomp.sqrt_trace,
        "discarded_mass": decomp.discarded_mass,
        "truncation_tol": decomp.truncation_tol,
        "degeneracy_tol": decomp.degeneracy_tol,
        "grid": {
            "nodes": decomp.grid.nodes.tolist(),
            "weights": decomp.grid.weights.tolist(),
        },
        "eigenfunctions_re": decomp.modes.real.T.tolist(),
        "eigenfunctions_im": decomp.modes.imag.T.tolist(),
    }
