"""
Closed-form tails, bounds and asymptotes of the
squared norms

    ||phi||^2 = sum_n |s_n|^2 mu_n,
    ||psi||^2 = sum_n |s_n|^2 (mu_n/kappa_1)^(1/2),

written in terms of the distinct eigenvalues kappa_j
with multiplicities g_j. Every |s_n|^2 is a unit-mean
exponential, so each group contributes a
Gamma(g_j, kappa_j) term.

All products are evaluated as compensated sums of
logarithms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import special

from ..logger import logger
from ..spectral import SpectralDecomposition, group_degeneracies, DEGENERACY_TOL
from ..structs import DegeneracyGroup, Estimate, FieldKind
from ..utils import SeedLike, log1m_prod, make_rng

class AnalysisError(ValueError):
    pass

# Largest number of distinct rates for which the
# hypoexponential tail is evaluated in closed form.
HYPO_MAX_MODES = 12
# Largest partial-fraction coefficient accepted before
# the closed form is considered to cancel badly.
HYPO_MAX_COEF = 1e8
OVERLAP_MC_SAMPLES = 1_000_000

@dataclass(frozen=True)
class SpectrumSummary:
    """
    Distinct eigenvalues kappa_1 > kappa_2 > ... with
    multiplicities, and the constants derived from them.
    """
    groups: tuple[DegeneracyGroup, ...]

    def __post_init__(self) -> None:
        if not self.groups:
            raise AnalysisError("A spectrum needs at least one group.")
        kappas = [g.kappa for g in self.groups]
        if any(k <= 0 for k in kappas):
            raise AnalysisError("Group eigenvalues must be positive.")
        if any(g.g < 1 for g in self.groups):
            raise AnalysisError("Group multiplicities must be positive.")
        if any(a <= b for a, b in zip(kappas, kappas[1:])):
            raise AnalysisError(
                f"Group eigenvalues must be strictly decreasing, got {kappas}."
            )

    @classmethod
    def from_groups(cls, groups: Iterable[tuple[float, int]]) -> SpectrumSummary:
        """From (kappa_j, g_j) pairs, kappa_1 first"""
        return cls(tuple(DegeneracyGroup(float(k), int(g)) for k, g in groups))

    @classmethod
    def from_eigenvalues(cls, mu: Iterable[float],
                         rel_tol: float = DEGENERACY_TOL) -> SpectrumSummary:
        mu = np.sort(np.asarray(list(mu), dtype=float))[::-1]
        return cls(group_degeneracies(mu[mu > 0], rel_tol))

    @classmethod
    def from_decomposition(cls, decomp: SpectralDecomposition) -> SpectrumSummary:
        return cls(decomp.groups)

    @property
    def kappa1(self) -> float:
        return self.groups[0].kappa

    @property
    def g1(self) -> int:
        return self.groups[0].g

    @property
    def orthogonal(self) -> tuple[DegeneracyGroup, ...]:
        return self.groups[1:]

    @property
    def kappas(self) -> np.ndarray:
        return np.array([g.kappa for g in self.orthogonal])

    @property
    def multiplicities(self) -> np.ndarray:
        return np.array([g.g for g in self.orthogonal], dtype=float)

    @property
    def eigenvalues(self) -> np.ndarray:
        """All eigenvalues with repetition"""
        return np.repeat([g.kappa for g in self.groups], [g.g for g in self.groups])

    @property
    def ratios(self) -> np.ndarray:
        """kappa_j/kappa_1 for j >= 2"""
        return self.kappas/self.kappa1

    @property
    def tilted_kappas(self) -> np.ndarray:
        """kappa_j' = kappa_j/(1 - kappa_j/kappa_1)"""
        return self.kappas/(1.0 - self.ratios)

    @property
    def Z(self) -> float:
        """Tilt normalizer prod_j (1 - kappa_j/kappa_1)^-g_j"""
        return math.exp(-log1m_prod(self.ratios, self.multiplicities))

    @property
    def c_infinity(self) -> float:
        return c_infinity(self)

    @property
    def rho_perp(self) -> float:
        return rho_perp_bound(self)

    def __repr__(self) -> str:
        body = ", ".join(f"({g.kappa:.6g}, {g.g})" for g in self.groups)
        return f"<SpectrumSummary([{body}])>"

SpectrumLike = SpectrumSummary | SpectralDecomposition

def as_summary(spectrum: SpectrumLike) -> SpectrumSummary:
    if isinstance(spectrum, SpectralDecomposition):
        return SpectrumSummary.from_decomposition(spectrum)
    return spectrum

def _check_positive(name: str, value: float, strict: bool = True) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0 or (strict and value == 0):
        cmp = ">" if strict else ">="
        raise AnalysisError(f"{name} must be finite and {cmp} 0, got {value}.")
    return value

def parallel_tail(r: float, g1: int, kappa1: float) -> float:
    """
    Upper tail of Gamma(g1, kappa1) at r,

        exp(-r/kappa1) sum_{k<g1} (r/kappa1)^k / k!.
    """
    r = _check_positive("r", r, strict=False)
    return float(special.gammaincc(int(g1), r/kappa1))

def chernoff_bound(u: float, spectrum: SpectrumLike, a: float | None = None) -> float:
    """
    Exponential Markov bound on P(||phi_perp||^2 > u),

        exp(-a u) prod_{j>=2} (1 - a kappa_j)^-g_j,

    valid for 0 < a < 1/kappa_2. Defaults to the midpoint
    a = (1/kappa_1 + 1/kappa_2)/2.
    """
    s = as_summary(spectrum)
    u = _check_positive("u", u, strict=False)
    if not s.orthogonal:
        a = 1.0/s.kappa1 if a is None else a
        if a <= 0:
            raise AnalysisError(f"Tilt parameter must be positive, got {a}.")
        return math.exp(-a*u)
    kappa2 = s.orthogonal[0].kappa
    if a is None:
        a = (1.0/s.kappa1 + 1.0/kappa2)/2
    if not 0 < a < 1.0/kappa2:
        raise AnalysisError(
            f"Tilt parameter a={a} must lie in (0, 1/kappa2={1.0/kappa2:.6g})."
        )
    return math.exp(-a*u - log1m_prod(a*s.kappas, s.multiplicities))

def hypoexponential_tail(t: float, scales: Iterable[float]) -> float:
    """
    P(sum_j X_j > t) for independent exponentials X_j
    with distinct means `scales`:

        sum_j prod_{k != j} theta_j/(theta_j - theta_k) exp(-t/theta_j).
    """
    theta = np.asarray(list(scales), dtype=float)
    if theta.size == 0:
        return 0.0 if t >= 0 else 1.0
    coefs = _hypo_coefficients(theta)
    return float(math.fsum((coefs*np.exp(-t/theta)).tolist()))

def _hypo_coefficients(theta: np.ndarray) -> np.ndarray:
    diff = theta[:, None] - theta[None, :]
    np.fill_diagonal(diff, 1.0)
    ratio = theta[:, None]/diff
    np.fill_diagonal(ratio, 1.0)
    return np.prod(ratio, axis=1)

def _closed_form_ok(theta: np.ndarray) -> bool:
    if theta.size > HYPO_MAX_MODES or np.unique(theta).size != theta.size:
        return False
    return bool(np.max(np.abs(_hypo_coefficients(theta))) <= HYPO_MAX_COEF)

def _gamma_sum_tail_mc(t: float,
                       kappas: np.ndarray,
                       g: np.ndarray,
                       n: int,
                       seed: SeedLike) -> Estimate:
    """
    Monte Carlo tail of sum_j Gamma(g_j, kappa_j),
    one group per draw.
    """
    rng = make_rng(seed)
    total = np.zeros(n)
    for k, gj in zip(kappas, g):
        total += rng.gamma(gj, k, size=n)
    p = float(np.mean(total > t))
    return Estimate(p, math.sqrt(p*(1 - p)/n))

def overlap_bound(r: float,
                  eps: float,
                  spectrum: SpectrumLike,
                  n_mc: int = OVERLAP_MC_SAMPLES,
                  seed: SeedLike = 0) -> Estimate:
    """
    Bound on P(||phi_hat_perp||_2 > eps | ||phi||^2 > r),

        int_{eps^2 r}^inf exp(u/kappa_1) dP_perp(u)
            = Z * P_tilted(U > eps^2 r),

    where U is, under the tilted law, a sum of
    Gamma(g_j, kappa_j') terms. Closed form when every
    orthogonal group is simple, Monte Carlo with a
    standard error otherwise.
    """
    s = as_summary(spectrum)
    r = _check_positive("r", r)
    eps = _check_positive("eps", eps, strict=False)
    t = eps*eps*r
    if not s.orthogonal:
        return Estimate(0.0 if eps > 0 else 1.0)
    if t == 0:
        return Estimate(s.Z)
    theta = s.tilted_kappas
    if np.all(s.multiplicities == 1) and _closed_form_ok(theta):
        return Estimate(s.Z*hypoexponential_tail(t, theta))
    logger.warning(
        f"Tilted tail at t={t:g} has repeated or ill-conditioned rates; "
        f"using {n_mc:_} Monte Carlo draws."
    )
    p = _gamma_sum_tail_mc(t, theta, s.multiplicities, int(n_mc), seed)
    return Estimate(s.Z*p.value, s.Z*p.se)

def exact_tail(r: float, spectrum: SpectrumLike) -> float | None:
    """
    Exact P(||phi||^2 > r) when it has a closed form:
    a single group (Gamma tail) or all groups simple
    (hypoexponential tail). None otherwise.
    """
    s = as_summary(spectrum)
    r = _check_positive("r", r, strict=False)
    if not s.orthogonal:
        return parallel_tail(r, s.g1, s.kappa1)
    kappas = np.array([g.kappa for g in s.groups])
    if s.g1 == 1 and np.all(s.multiplicities == 1) and _closed_form_ok(kappas):
        return max(0.0, hypoexponential_tail(r, kappas))
    return None

def tail_asymptote(r: float,
                   spectrum: SpectrumLike,
                   field: FieldKind | str = FieldKind.PHI) -> float:
    """
    Large-r form of the tail,

        x^(g1-1) e^-x / (g1-1)! prod_{j>=2} (1 - rho_j)^-g_j,

    with x = r/kappa_1. rho_j = kappa_j/kappa_1 gives
    P(||phi||^2 > r), rho_j = (kappa_j/kappa_1)^(1/2)
    gives P(||psi||^2 > r/kappa_1).
    """
    s = as_summary(spectrum)
    r = _check_positive("r", r)
    field = FieldKind.from_value(field)
    rho = s.ratios if field is FieldKind.PHI else np.sqrt(s.ratios)
    x = r/s.kappa1
    log_p = (s.g1 - 1)*math.log(x) - x - math.lgamma(s.g1)
    return math.exp(log_p - log1m_prod(rho, s.multiplicities))

def c_infinity(spectrum: SpectrumLike) -> float:
    """
    Limit of P(||psi||^2 > r/kappa_1)/P(||phi||^2 > r),

        prod_{j>=2} [(1 - rho_j)/(1 - sqrt(rho_j))]^g_j.
    """
    s = as_summary(spectrum)
    rho, g = s.ratios, s.multiplicities
    return math.exp(log1m_prod(rho, g) - log1m_prod(np.sqrt(rho), g))

def rho_perp_bound(spectrum: SpectrumLike) -> float:
    """
    r-independent cap on E(||phi_perp||^2 | ||phi||^2 > r),
    Z sum_{j>=2} g_j kappa_j'.
    """
    s = as_summary(spectrum)
    if not s.orthogonal:
        return 0.0
    return s.Z*math.fsum((s.multiplicities*s.tilted_kappas).tolist())

def sup_mean_bound(eps: float, B: float, psi_ratio_mean: float, p_sup: float) -> float:
    """
    Finite-r bound on E(||phi_hat_perp||_inf | ||phi||^2 > r),

        eps + B sqrt(E[||psi_perp||^2/(r/kappa_1)]) sqrt(P(||phi_hat_perp||_inf > eps)),

    from the coupling inequality and Cauchy-Schwarz.
    """
    return eps + B*math.sqrt(max(psi_ratio_mean, 0.0))*math.sqrt(max(p_sup, 0.0))

@dataclass(frozen=True)
class AmplifierMoment:
    """
    q-th moment of the amplifier exp(lambda ||phi||^2 / V).
    `value` is inf when divergent.
    """
    q: int
    lam: float
    lambda_q: float
    value: float
    divergent: bool

    def as_dict(self) -> dict:
        return {
            "q": self.q, "lambda": self.lam, "lambda_q": self.lambda_q,
            "value": self.value, "divergent": self.divergent,
        }

def amplifier_moment(spectrum: SpectrumLike | Iterable[float],
                     q: int,
                     lam: float,
                     volume: float = 1.0) -> AmplifierMoment:
    """
    E exp(q lam ||phi||^2 / V) = prod_n (1 - q lam mu_n / V)^-1
    over the retained modes. Finite iff lam < lambda_q
    with lambda_q = V/(q kappa_1). V = 1 is the massless
    limit on the unit domain.

    A decomposition contributes its retained mu_n. A
    `SpectrumSummary` only knows the group values, so
    each kappa_j counts g_j times.
    """
    if isinstance(spectrum, SpectralDecomposition):
        mu = np.asarray(spectrum.eigenvalues, dtype=float)
    elif isinstance(spectrum, SpectrumSummary):
        mu = spectrum.eigenvalues
    else:
        mu = np.sort(np.asarray(list(spectrum), dtype=float))[::-1]
    if int(q) != q or q < 1:
        raise AnalysisError(f"Moment order q must be a positive integer, got {q}.")
    lam = _check_positive("lambda", lam, strict=False)
    volume = _check_positive("volume", volume)
    kappa1 = float(mu[0])
    lambda_q = volume/(q*kappa1)
    if lam >= lambda_q:
        return AmplifierMoment(int(q), lam, lambda_q, math.inf, True)
    x = q*lam*mu/volume
    value = math.exp(-math.fsum(np.log1p(-x).tolist()))
    return AmplifierMoment(int(q), lam, lambda_q, value, False)
