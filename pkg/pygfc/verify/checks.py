"""
Acceptance checks.

Each check takes a `VerifyContext` and returns report
rows. The reference spectrum is kappa_1 = 1, kappa_2 = 0.5
unless a check says otherwise.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import stats

from ..analysis import (
    Check, ReportRow, amplifier_moment, chernoff_bound, condensation_curves,
    exact_tail, overlap_bound, sup_mean_bound, tail_asymptote, c_infinity
)
from ..conditioning import (
    ConditionalEnsemble, estimate, indicator, psi_perp_ratio, psi_conditional,
    sample_conditional_decomposition, sample_conditional_rejection,
    truncated_gamma_sample
)
from ..io import SampleColumns
from ..kernels import exponential_oracle, make_kernel
from ..sampling import CoefficientStream, audit_sup_norm, draw_coefficients, sample_unconditional
from ..spectral import (
    TRUNCATION_TOL, build_grid, decompose, gram_error, smoothness_diagnostics, trace_error
)
from ..utils import child_sequence, make_rng
from .suite import VerifyContext

KS_MAX = 0.01
OVERLAP_EPS = 0.3
SUP_EPS = 0.1
# Standard errors of slack for monotone sweeps
MONOTONE_NSE = 2.0
COUPLING_SLACK = 1e-9
AUDIT_DRAWS = 100
AUDIT_GAP = 0.05
ORACLE_RTOL = 1e-4
GRAM_TOL = 1e-8
TRACE_TOL = TRUNCATION_TOL + 1e-8
ORACLE_MODES = 10

def _combined_se(*ses: float) -> float:
    return math.sqrt(sum(s*s for s in ses))

def gamma_law(ctx: VerifyContext) -> list[ReportRow]:
    """
    ||phi_par||^2 ~ Gamma(g_1, kappa_1), for a simple
    and a doubly degenerate top eigenvalue, and the
    truncated Gamma sampler against its closed forms.
    """
    ss = ctx.stream("gamma_law")
    rows = []
    for i, eigs in enumerate(([1.0, 0.5], [1.0, 1.0, 0.25])):
        decomp = ctx.mercer(eigs)
        frame = sample_unconditional(
            decomp, ctx.n_unconditional, child_sequence(ss, i), njobs=ctx.njobs
        )
        par = frame[SampleColumns.PAR_SQ.value].to_numpy()
        ks = stats.kstest(par, stats.gamma(a=decomp.g1, scale=decomp.kappa1).cdf)
        rows.append(ReportRow(
            f"gamma_law[g1={decomp.g1}]", "KS(|phi_par|^2, Gamma(g1, kappa1)) < 0.01",
            KS_MAX, float(ks.statistic)
        ))

    rng = make_rng(ss, 2)
    v = truncated_gamma_sample(2, 1.0, 0.0, rng, size=ctx.n_unconditional)
    ks = stats.kstest(v, stats.gamma(a=2).cdf)
    rows.append(ReportRow(
        "truncated_gamma[lower=0]", "KS(V, Gamma(2, 1)) < 0.01", KS_MAX, float(ks.statistic)
    ))
    v = truncated_gamma_sample(2, 1.0, 1.0, rng, size=ctx.n_unconditional)
    rows.append(ReportRow(
        "truncated_gamma[lower=1]", "E(V | V > 1) = 5/2",
        2.5, float(np.mean(v)), float(np.std(v, ddof=1)/math.sqrt(v.size)),
        check=Check.MATCH
    ))
    return rows

def exact_tail_agreement(ctx: VerifyContext, r: float = 5.0) -> list[ReportRow]:
    """
    Rejection estimate of P(|phi|^2 > r) against the
    closed form, and rejection against decomposition
    for the event probability and the overlap.
    """
    ss = ctx.stream("exact_tail")
    rej = sample_conditional_rejection(
        ctx.reference, r, ctx.n_conditional, child_sequence(ss, 0), njobs=ctx.njobs
    )
    dec = sample_conditional_decomposition(
        ctx.reference, r, ctx.n_conditional, child_sequence(ss, 1), njobs=ctx.njobs
    )
    rows = [
        ReportRow(
            "exact_tail[rejection]", "P(|phi|^2>r) = 2e^-r - e^-2r",
            exact_tail(r, ctx.spectrum), rej.p_event.value, rej.p_event.se, r, Check.MATCH
        ),
        ReportRow(
            "method_agreement[p_event]", "decomposition = rejection",
            rej.p_event.value, dec.p_event.value,
            _combined_se(rej.p_event.se, dec.p_event.se), r, Check.MATCH
        ),
    ]
    overlap = indicator(SampleColumns.PERP_HAT, OVERLAP_EPS)
    for name, functional in (
        (f"p_overlap[eps={OVERLAP_EPS:g}]", overlap),
        ("e_sup_perp", SampleColumns.SUP_PERP_HAT),
    ):
        a, b = estimate(rej, functional), estimate(dec, functional)
        rows.append(ReportRow(
            f"method_agreement[{name}]", "decomposition = rejection",
            a.value, b.value, _combined_se(a.se, b.se), r, Check.MATCH
        ))
    return rows

def _monotone_rows(formula: str,
                   ensembles: list[ConditionalEnsemble],
                   functional) -> list[ReportRow]:
    rows = []
    prev = None
    for ens in ensembles:
        est = estimate(ens, functional)
        if prev is not None:
            rows.append(ReportRow(
                formula, "non-increasing in r",
                prev.value, est.value, _combined_se(prev.se, est.se), ens.r,
                nse=MONOTONE_NSE
            ))
        prev = est
    return rows

def overlap_decay(ctx: VerifyContext, eps: float = OVERLAP_EPS) -> list[ReportRow]:
    """
    P(|phi_hat_perp| > eps | |phi|^2 > r) decreases over
    the sweep and stays below its bound.
    """
    functional = indicator(SampleColumns.PERP_HAT, eps)
    rows = _monotone_rows(f"overlap_monotone[eps={eps:g}]", ctx.sweep, functional)
    for ens in ctx.sweep:
        est = estimate(ens, functional)
        bound = overlap_bound(ens.r, eps, ctx.spectrum)
        rows.append(ReportRow(
            f"overlap_bound[eps={eps:g}]", "P(|phi_hat_perp|>eps | .) <= bound",
            bound.value, est.value, _combined_se(est.se, bound.se), ens.r
        ))
    return rows

def chernoff_dominance(ctx: VerifyContext, u_values: tuple[float, ...] = (0.5, 1.0, 2.0)) -> list[ReportRow]:
    frame = sample_unconditional(
        ctx.reference, ctx.n_unconditional, ctx.stream("chernoff"), njobs=ctx.njobs
    )
    perp = frame[SampleColumns.PERP_SQ.value].to_numpy()
    n = perp.size
    rows = []
    for u in u_values:
        p = float(np.mean(perp > u))
        rows.append(ReportRow(
            f"chernoff_bound[u={u:g}]", "P(|phi_perp|^2>u) <= e^(-au) prod (1-a kappa_j)^-g_j",
            chernoff_bound(u, ctx.spectrum), p, math.sqrt(p*(1 - p)/n)
        ))
    return rows

def tail_asymptote_agreement(ctx: VerifyContext, r: float = 10.0) -> list[ReportRow]:
    """
    Decomposition estimate of P(|phi|^2 > r) against the
    large-r form, with its relative error and ESS.
    """
    ens = sample_conditional_decomposition(
        ctx.reference, r, ctx.n_conditional, ctx.stream("tail_asymptote"), njobs=ctx.njobs
    )
    p = ens.p_event
    return [
        ReportRow(
            "tail_asymptote[phi]", "P(|phi|^2>r) within 5% of 2e^-r",
            tail_asymptote(r, ctx.spectrum), p.value, p.se, r, Check.RATIO, 0.05
        ),
        ReportRow("relative_se", "se/P < 0.02", 0.02, p.se/p.value, r=r),
        ReportRow("ess_fraction", "ESS/n >= 0.2", 0.2, ens.ess/ens.n, r=r, check=Check.LOWER),
    ]

def c_infinity_ratio(ctx: VerifyContext, r: float = 15.0) -> list[ReportRow]:
    """
    P(|psi|^2 > r/kappa_1)/P(|phi|^2 > r) against C_inf.
    """
    ss = ctx.stream("c_infinity")
    phi = sample_conditional_decomposition(
        ctx.reference, r, ctx.n_conditional, child_sequence(ss, 0), njobs=ctx.njobs
    )
    psi = psi_conditional(
        ctx.reference, r/ctx.reference.kappa1, ctx.n_conditional,
        child_sequence(ss, 1), njobs=ctx.njobs
    )
    ratio = psi.p_event.value/phi.p_event.value
    ratio_se = ratio*math.hypot(
        psi.p_event.se/psi.p_event.value, phi.p_event.se/phi.p_event.value
    )
    return [ReportRow(
        "c_infinity", "P(|psi|^2>r/kappa1)/P(|phi|^2>r) within 10% of C_inf",
        c_infinity(ctx.spectrum), ratio, ratio_se, r, Check.RATIO, 0.10
    )]

def coupling(ctx: VerifyContext, eps: float = SUP_EPS) -> list[ReportRow]:
    """
    Sample-wise coupling inequality
        |phi_hat_perp|_inf <= sqrt(kappa_1) B |psi_perp| / |phi|,
    the decreasing sup-norm profile, its finite-r bound
    and the gap between node and dense sup-norms.
    """
    decomp = ctx.reference
    scale = math.sqrt(decomp.kappa1)*decomp.B
    rows = []
    for ens in ctx.sweep:
        f = ens.frame
        lhs = f[SampleColumns.SUP_PERP_HAT.value].to_numpy()
        rhs = scale*f[SampleColumns.PSI_PERP.value].to_numpy()/np.sqrt(
            f[SampleColumns.NORM2_SQ.value].to_numpy()
        )
        violations = int(np.sum(lhs > rhs*(1 + COUPLING_SLACK) + COUPLING_SLACK))
        rows.append(ReportRow(
            "coupling_violations", "#{|phi_hat_perp|_inf > sqrt(kappa1) B |psi_perp|/|phi|} = 0",
            0.0, float(violations), r=ens.r
        ))
        sup = estimate(ens, SampleColumns.SUP_PERP_HAT)
        ratio = estimate(ens, psi_perp_ratio(ens))
        p_sup = estimate(ens, indicator(SampleColumns.SUP_PERP_HAT, eps))
        rows.append(ReportRow(
            "sup_mean_bound", "E(|phi_hat_perp|_inf | .) <= eps + B sqrt(E psi ratio) sqrt(P sup)",
            sup_mean_bound(eps, decomp.B, ratio.value, p_sup.value),
            sup.value, sup.se, ens.r
        ))
    rows += _monotone_rows("sup_monotone", ctx.sweep, SampleColumns.SUP_PERP_HAT)

    stream = CoefficientStream(ctx.stream("coupling"))
    perp = decomp.perpendicular
    modes = decomp.modes[:, perp]
    gap = 0.0
    for _ in range(AUDIT_DRAWS):
        coeffs = draw_coefficients(decomp.n_modes, stream)
        node = float(np.max(np.abs(
            modes @ (coeffs.values[perp]*np.sqrt(decomp.eigenvalues[perp]))
        )))
        dense = audit_sup_norm(decomp, coeffs)
        if dense > 0:
            gap = max(gap, (dense - node)/dense)
    rows.append(ReportRow(
        "sup_audit_gap", "(dense - node)/dense sup-norm of phi_perp", AUDIT_GAP, gap
    ))
    return rows

def condensation(ctx: VerifyContext) -> list[ReportRow]:
    curves = condensation_curves(ctx.sweep, ctx.spectrum)
    rows = []
    for rec in curves.to_dict("records"):
        rho = rec["rho_perp_bound"]
        rows.append(ReportRow(
            "condensation_par", "E_par(r) > r - rho_perp",
            rec["r"] - rho, rec["e_par"], rec["e_par_se"], rec["r"], Check.LOWER
        ))
        rows.append(ReportRow(
            "condensation_perp", "E_perp(r) <= rho_perp",
            rho, rec["e_perp"], rec["e_perp_se"], rec["r"]
        ))
    return rows

def spectral_fidelity(ctx: VerifyContext,
                      M: int = 512,
                      smooth_ell: float = 0.3,
                      smooth_M: int = 128) -> list[ReportRow]:
    """
    Exponential kernel against its exact eigenvalues,
    and the decay diagnostics of a smooth and a rough
    kernel.
    """
    rough = decompose(make_kernel({"family": "exponential", "ell": 1.0, "sigma2": 1.0}), build_grid(M))
    oracle = exponential_oracle(1.0, 1.0, ORACLE_MODES)
    rel = np.abs(rough.eigenvalues[:ORACLE_MODES] - oracle)/oracle
    smooth = decompose(
        make_kernel({"family": "squared-exponential", "ell": smooth_ell}), build_grid(smooth_M)
    )
    smooth_diag = smoothness_diagnostics(smooth)
    rough_diag = smoothness_diagnostics(rough)
    return [
        ReportRow("exponential_oracle", "max relative error, top 10 modes",
                  ORACLE_RTOL, float(np.max(rel))),
        ReportRow("gram_error", "max |Gram - I|", GRAM_TOL, gram_error(rough)),
        ReportRow("trace_error", "|sum mu_n - int C(x,x)|/trace", TRACE_TOL, trace_error(rough)),
        ReportRow("decay[squared-exponential]", "slope < -5",
                  -5.0, smooth_diag.slope),
        ReportRow("decay[exponential]", "slope >= -5 (decay check fails)",
                  -5.0, rough_diag.slope, check=Check.LOWER),
        ReportRow("decay_slope[exponential]", "slope ~ -2",
                  -2.0, rough_diag.slope, check=Check.RATIO, rtol=0.1),
    ]

def amplifier(ctx: VerifyContext,
              eigs: tuple[float, ...] = (1.0, 0.5),
              q: int = 2) -> list[ReportRow]:
    finite = amplifier_moment(eigs, q, 0.25)
    rows = [ReportRow(
        "amplifier_moment", "prod (1 - q lam mu_n)^-1 = 8/3 at q=2, lam=1/4",
        8/3, finite.value, check=Check.MATCH, rtol=1e-10
    )]
    for lam in (finite.lambda_q, 1.2*finite.lambda_q):
        moment = amplifier_moment(eigs, q, lam)
        rows.append(ReportRow(
            f"amplifier_divergence[lam={lam:g}]", "divergent at lam >= lambda_q",
            1.0, float(moment.divergent), check=Check.MATCH
        ))
    return rows

def determinism(ctx: VerifyContext, r: float = 5.0, n: int = 2000, chunk_size: int = 512) -> list[ReportRow]:
    """
    Identical frames for the same seed with one and with
    two worker processes.
    """
    ss = ctx.stream("determinism")
    rows = []
    for name, sampler in (
        ("decomposition", sample_conditional_decomposition),
        ("rejection", sample_conditional_rejection),
    ):
        a = sampler(ctx.reference, r, n, ss, njobs=1, chunk_size=chunk_size)
        b = sampler(ctx.reference, r, n, ss, njobs=2, chunk_size=chunk_size)
        same = a.frame.equals(b.frame) and a.p_event == b.p_event
        rows.append(ReportRow(
            f"determinism[{name}]", "same seed, njobs 1 and 2: identical samples",
            1.0, float(same), r=r, check=Check.MATCH
        ))
    return rows

DEFAULT_CHECKS = (
    gamma_law,
    exact_tail_agreement,
    overlap_decay,
    chernoff_dominance,
    tail_asymptote_agreement,
    c_infinity_ratio,
    coupling,
    condensation,
    spectral_fidelity,
    amplifier,
    determinism,
)
