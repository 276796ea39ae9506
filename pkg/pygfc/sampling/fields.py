"""
Karhunen-Loève synthesis of the coupled fields

    phi(x) = sum_n s_n sqrt(mu_n) phi_n(x)
    psi(x) = sum_n s_n (mu_n/kappa_1)^(1/4) phi_n(x)

from one draw of i.i.d. standard complex Gaussian
coefficients s_n (E|s_n|^2 = 1, E s_n^2 = 0).

Because the phi_n are orthonormal under the grid
weights, every L2 norm equals its coefficient-space
sum, e.g. ||phi||^2 = sum_n |s_n|^2 mu_n. Norms are
computed that way; `quadrature_norm_sq` gives the
grid-quadrature value for cross-checks. Sup-norms are
maxima over the grid nodes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..io import SampleColumns
from ..spectral import SpectralDecomposition, nystrom_interpolate
from ..structs import QuadratureGrid
from ..utils import SeedLike, child_sequence, seed_sequence, stream_id

class SamplingError(ValueError):
    pass

class CoefficientStream:
    """
    Seeded source of standard complex Gaussian
    coefficients. Keeps count of the coefficients
    drawn so far.
    """
    def __init__(self, seed: SeedLike, index: int | None = None) -> None:
        ss = seed_sequence(seed) if index is None else child_sequence(seed, index)
        self.id = stream_id(ss)
        self.rng = np.random.Generator(np.random.PCG64(ss))
        self.counter = 0

    def normal(self, shape: tuple[int, ...], variance: np.ndarray | float = 1.0) -> np.ndarray:
        """
        Complex Gaussians with the given variance,
        E|z|^2 = variance and E z^2 = 0.
        """
        z = self.rng.standard_normal(shape + (2,))
        self.counter += int(np.prod(shape))
        return (z[..., 0] + 1j*z[..., 1])*np.sqrt(np.asarray(variance)/2)

    def __repr__(self) -> str:
        return f"<CoefficientStream({self.id}, counter={self.counter})>"

@dataclass(frozen=True, eq=False)
class CoefficientDraw:
    """
    One draw of N coefficients and where it came from.
    `counter` is the stream position before the draw.
    """
    values: np.ndarray
    stream: str
    counter: int

    @property
    def n_modes(self) -> int:
        return int(self.values.size)

@dataclass(frozen=True)
class NormRecord:
    """
    Norms of one coupled sample. `perp_hat` and
    `sup_perp_hat` are NaN when ||phi|| = 0, in which
    case `profile_defined` is False.
    """
    norm2_sq: float
    par_sq: float
    perp_sq: float
    perp_hat: float
    sup_perp_hat: float
    sup_phi: float
    psi_norm2_sq: float
    psi_perp: float
    psi_perp_sq: float
    profile_defined: bool

@dataclass(frozen=True, eq=False)
class CoupledSample:
    """
    Fields phi and psi at the grid nodes, synthesized
    from the same coefficients, and their norms.
    """
    coefficients: CoefficientDraw
    phi: np.ndarray
    psi: np.ndarray
    norms: NormRecord

    @property
    def phi_hat(self) -> np.ndarray | None:
        """L2-normalized profile, None for a zero field"""
        if not self.norms.profile_defined:
            return None
        return self.phi/np.sqrt(self.norms.norm2_sq)

def draw_coefficients(N: int, stream: CoefficientStream) -> CoefficientDraw:
    """
    Draw N i.i.d. standard complex Gaussians, real and
    imaginary parts independent with variance 1/2.
    """
    if N < 1:
        raise SamplingError(f"Need at least one mode, got N={N}.")
    counter = stream.counter
    return CoefficientDraw(stream.normal((N,)), stream.id, counter)

def psi_weights(decomp: SpectralDecomposition) -> np.ndarray:
    """(mu_n/kappa_1)^(1/4), the psi-field amplitudes"""
    return (decomp.eigenvalues/decomp.kappa1)**0.25

def norm_table(decomp: SpectralDecomposition, S: np.ndarray) -> dict[str, np.ndarray]:
    """
    Vectorized norms for a batch of coefficient rows
    S of shape (n, N). Returns arrays keyed by the
    `SampleColumns` values.
    """
    mu = decomp.eigenvalues
    par, perp = decomp.parallel, decomp.perpendicular
    a2 = np.abs(S)**2
    par_sq = a2[:, par] @ mu[par]
    perp_sq = a2[:, perp] @ mu[perp]
    norm2_sq = par_sq + perp_sq
    psi2 = psi_weights(decomp)**2
    psi_perp_sq = a2[:, perp] @ psi2[perp]
    psi_norm2_sq = a2[:, par] @ psi2[par] + psi_perp_sq

    amp = S*np.sqrt(mu)[None, :]
    field_perp = amp[:, perp] @ decomp.modes[:, perp].T
    field = amp[:, par] @ decomp.modes[:, par].T + field_perp
    sup_perp = np.max(np.abs(field_perp), axis=1)
    sup_phi = np.max(np.abs(field), axis=1)

    norm = np.sqrt(norm2_sq)
    defined = norm > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        perp_hat = np.where(defined, np.sqrt(perp_sq)/norm, np.nan)
        sup_perp_hat = np.where(defined, sup_perp/norm, np.nan)
    return {
        SampleColumns.NORM2_SQ.value: norm2_sq,
        SampleColumns.PAR_SQ.value: par_sq,
        SampleColumns.PERP_SQ.value: perp_sq,
        SampleColumns.PERP_HAT.value: perp_hat,
        SampleColumns.SUP_PERP_HAT.value: sup_perp_hat,
        SampleColumns.SUP_PHI.value: sup_phi,
        SampleColumns.PSI_NORM2_SQ.value: psi_norm2_sq,
        SampleColumns.PSI_PERP.value: np.sqrt(psi_perp_sq),
        SampleColumns.PSI_PERP_SQ.value: psi_perp_sq,
    }

def _values(coeffs: CoefficientDraw | np.ndarray) -> np.ndarray:
    return coeffs.values if isinstance(coeffs, CoefficientDraw) else np.asarray(coeffs, dtype=complex)

def norms(sample: CoupledSample | CoefficientDraw | np.ndarray,
          decomp: SpectralDecomposition) -> NormRecord:
    """
    L2 norms of phi, its kappa_1 projection and the
    orthogonal rest, the profile norms and the psi norms.
    """
    if isinstance(sample, CoupledSample):
        sample = sample.coefficients
    s = _values(sample)
    if s.size != decomp.n_modes:
        raise SamplingError(
            f"Got {s.size} coefficients for {decomp.n_modes} retained modes."
        )
    table = norm_table(decomp, s[None, :])
    values = {k: float(v[0]) for k, v in table.items()}
    return NormRecord(
        profile_defined=values[SampleColumns.NORM2_SQ.value] > 0,
        **values
    )

def synthesize(decomp: SpectralDecomposition,
               coeffs: CoefficientDraw | np.ndarray) -> CoupledSample:
    """
    Build phi and psi at the grid nodes from the same
    coefficients and compute all norms.
    """
    if not isinstance(coeffs, CoefficientDraw):
        coeffs = CoefficientDraw(np.asarray(coeffs, dtype=complex), "external", 0)
    s = coeffs.values
    if s.ndim != 1 or s.size != decomp.n_modes:
        raise SamplingError(
            f"Got {s.size} coefficients for {decomp.n_modes} retained modes."
        )
    phi = decomp.modes @ (s*np.sqrt(decomp.eigenvalues))
    psi = decomp.modes @ (s*psi_weights(decomp))
    return CoupledSample(coeffs, phi, psi, norms(coeffs, decomp))

def quadrature_norm_sq(values: np.ndarray, grid: QuadratureGrid) -> float:
    """
    sum_i w_i |f(x_i)|^2
    """
    return float(grid.integrate(np.abs(values)**2))

def audit_sup_norm(decomp: SpectralDecomposition,
                   coeffs: CoefficientDraw | np.ndarray,
                   factor: int = 4) -> float:
    """
    ||phi_perp||_inf on a uniform grid `factor` times
    denser than the quadrature grid, with the
    eigenfunctions carried there by Nyström interpolation.
    """
    s = _values(coeffs)
    perp = decomp.perpendicular
    if decomp.g1 == decomp.n_modes:
        return 0.0
    x = np.linspace(0.0, 1.0, factor*decomp.grid.size)
    modes = nystrom_interpolate(decomp, x)[:, perp]
    field = modes @ (s[perp]*np.sqrt(decomp.eigenvalues[perp]))
    return float(np.max(np.abs(field)))
