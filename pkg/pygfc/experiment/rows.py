"""
Report rows pairing each closed form with its
Monte Carlo counterpart.

The builders only read summary tables, so a report
can be rebuilt from the CSV files of a finished run.
"""
from __future__ import annotations

import math

import numpy as np
import pandas as pd

from ..analysis import (
    Check, ReportRow, SpectrumSummary,
    amplifier_moment, c_infinity, chernoff_bound, exact_tail,
    overlap_bound, rho_perp_bound, sup_mean_bound, tail_asymptote
)
from ..io import ConcentrationColumns, SampleColumns, SummaryColumns, eps_column, se
from ..structs import FieldKind

# Smallest r/kappa_1 at which the large-r forms
# are compared with the estimates.
ASYMPTOTE_MIN_X = 10.0
# Relative slack on that cut, so r = 10 with a rounded kappa_1 still counts
ASYMPTOTE_CUT = ASYMPTOTE_MIN_X*(1 - 1e-9)
ASYMPTOTE_RTOL = 0.05
# Relative slack of the exact tail. Importance weights miss
# the rare draws with ||phi_perp||^2 > r, which the standard
# error does not see.
EXACT_RTOL = 1e-3
C_INF_RTOL = 0.10
PSI_PERP_SLACK = 0.15
# Standard errors of slack for the mean-tail trend
TREND_NSE = 2.0

# psi_summary.csv
PSI_R = "r"
PSI_T = "t"
PSI_P = "p_event"
PSI_MEAN_RATIO = "e_norm_ratio"

def summary_rows(summary: pd.DataFrame,
                 spectrum: SpectrumSummary,
                 B: float,
                 eps_values: list[float],
                 sup_eps: float,
                 n_mc: int,
                 seed: int) -> list[ReportRow]:
    """
    Rows built from the per-r ensemble summary:
    exact tail, overlap bound, sup-norm bound, tail
    asymptote and the condensation estimates.
    """
    rows: list[ReportRow] = []
    rho = rho_perp_bound(spectrum)
    kappa1 = spectrum.kappa1
    for rec in summary.to_dict("records"):
        r = float(rec[SummaryColumns.R.value])
        p = rec[SummaryColumns.P_EVENT.value]
        p_se = rec[se(SummaryColumns.P_EVENT)]
        exact = exact_tail(r, spectrum)
        if exact is not None:
            rows.append(ReportRow(
                "exact_tail", "P(|phi|^2>r) = hypoexponential tail",
                exact, p, p_se, r, Check.MATCH, EXACT_RTOL
            ))
        for eps in eps_values:
            col = eps_column(ConcentrationColumns.P_OVERLAP, eps)
            bound = overlap_bound(r, eps, spectrum, n_mc=n_mc, seed=seed)
            rows.append(ReportRow(
                f"overlap_bound[eps={eps:g}]",
                "P(|phi_hat_perp|>eps | .) <= Z P_tilt(U > eps^2 r)",
                bound.value, rec[col], math.hypot(rec[se(col)], bound.se), r
            ))
        rows.append(ReportRow(
            "sup_mean_bound",
            "E(|phi_hat_perp|_inf | .) <= eps + B sqrt(E psi ratio) sqrt(P sup)",
            sup_mean_bound(sup_eps, B, rec[SummaryColumns.E_PSI_PERP_RATIO.value],
                           rec[SummaryColumns.P_SUP_EPS.value]),
            rec[SummaryColumns.E_SUP_PERP.value], rec[se(SummaryColumns.E_SUP_PERP)], r
        ))
        if r/kappa1 >= ASYMPTOTE_CUT:
            rows.append(ReportRow(
                "tail_asymptote[phi]",
                "P(|phi|^2>r) ~ x^(g1-1) e^-x/(g1-1)! prod (1-rho_j)^-g_j",
                tail_asymptote(r, spectrum), p, p_se, r, Check.RATIO, ASYMPTOTE_RTOL
            ))
        rows.append(ReportRow(
            "condensation_par", "E_par(r) > r - rho_perp",
            r - rho, rec[SummaryColumns.E_PAR_SQ.value],
            rec[se(SummaryColumns.E_PAR_SQ)], r, Check.LOWER
        ))
        rows.append(ReportRow(
            "condensation_perp", "E_perp(r) <= rho_perp = Z sum g_j kappa_j'",
            rho, rec[SummaryColumns.E_PERP_SQ.value],
            rec[se(SummaryColumns.E_PERP_SQ)], r
        ))
        rows.append(ReportRow(
            "psi_perp_ratio", "E(|psi_perp|^2/(r/kappa1) | .) <= C_inf (1+0.15)",
            c_infinity(spectrum)*(1 + PSI_PERP_SLACK),
            rec[SummaryColumns.E_PSI_PERP_RATIO.value],
            rec[se(SummaryColumns.E_PSI_PERP_RATIO)], r
        ))
    return rows

def psi_rows(summary: pd.DataFrame,
             psi_summary: pd.DataFrame,
             spectrum: SpectrumSummary) -> list[ReportRow]:
    """
    Rows comparing the psi-field tails with the phi-field
    tails: the ratio limit C_inf and the psi asymptote,
    and the trend of E(|psi|^2 | |psi|^2>t)/t down to 1
    as t grows.
    `psi_summary` has one row per phi threshold r,
    evaluated at t = r/kappa_1.
    """
    rows: list[ReportRow] = []
    c_inf = c_infinity(spectrum)
    phi = summary.set_index(SummaryColumns.R.value)
    prev = None
    for rec in psi_summary.sort_values(PSI_T).to_dict("records"):
        r, t = float(rec[PSI_R]), float(rec[PSI_T])
        p_psi, p_psi_se = rec[PSI_P], rec[se(PSI_P)]
        ratio, ratio_se = rec[PSI_MEAN_RATIO], rec[se(PSI_MEAN_RATIO)]
        if prev is not None:
            rows.append(ReportRow(
                "psi_mean_tail", "E(|psi|^2 | |psi|^2>t)/t non-increasing in t",
                prev[0], ratio, math.hypot(prev[1], ratio_se), r, nse=TREND_NSE
            ))
        prev = (ratio, ratio_se)
        if t < ASYMPTOTE_CUT:
            continue
        rows.append(ReportRow(
            "tail_asymptote[psi]",
            "P(|psi|^2>r/kappa1) ~ x^(g1-1) e^-x/(g1-1)! prod (1-sqrt(rho_j))^-g_j",
            tail_asymptote(r, spectrum, FieldKind.PSI), p_psi, p_psi_se, r,
            Check.RATIO, ASYMPTOTE_RTOL
        ))
        if r in phi.index and p_psi > 0 and phi.loc[r, SummaryColumns.P_EVENT.value] > 0:
            p_phi = phi.loc[r, SummaryColumns.P_EVENT.value]
            p_phi_se = phi.loc[r, se(SummaryColumns.P_EVENT)]
            ratio = p_psi/p_phi
            ratio_se = ratio*math.hypot(p_psi_se/p_psi, p_phi_se/p_phi)
            rows.append(ReportRow(
                "c_infinity", "P(|psi|^2>r/kappa1)/P(|phi|^2>r) -> C_inf",
                c_inf, ratio, ratio_se, r, Check.RATIO, C_INF_RTOL
            ))
    return rows

def chernoff_u_values(spectrum: SpectrumSummary) -> list[float]:
    """Thresholds kappa_2 * {1, 2, 4}"""
    if not spectrum.orthogonal:
        return []
    kappa2 = spectrum.orthogonal[0].kappa
    return [kappa2, 2*kappa2, 4*kappa2]

def unconditional_rows(frame: pd.DataFrame,
                       spectrum: SpectrumSummary,
                       eigenvalues: np.ndarray,
                       q: int = 2) -> list[ReportRow]:
    """
    Rows from an unconditional batch: the mean squared
    norm against the trace, the Chernoff bounds and the
    amplifier moment at a quarter of the threshold
    coupling (where the estimator has finite variance).
    `eigenvalues` are the retained mu_n the batch was
    drawn with.
    """
    trace = math.fsum(np.asarray(eigenvalues, dtype=float).tolist())
    n = len(frame)
    norm2 = frame[SampleColumns.NORM2_SQ.value].to_numpy()
    perp = frame[SampleColumns.PERP_SQ.value].to_numpy()
    rows = [ReportRow(
        "trace", "E|phi|^2 = sum_n mu_n",
        trace, float(np.mean(norm2)), float(np.std(norm2, ddof=1)/math.sqrt(n)),
        check=Check.MATCH
    )]
    for u in chernoff_u_values(spectrum):
        p = float(np.mean(perp > u))
        rows.append(ReportRow(
            f"chernoff_bound[u={u:g}]",
            "P(|phi_perp|^2>u) <= e^(-au) prod (1-a kappa_j)^-g_j",
            chernoff_bound(u, spectrum), p, math.sqrt(p*(1 - p)/n)
        ))
    moment = amplifier_moment(eigenvalues, q, 0.0)
    lam = moment.lambda_q/4
    moment = amplifier_moment(eigenvalues, q, lam)
    amp = np.exp(q*lam*norm2)
    rows.append(ReportRow(
        f"amplifier_moment[q={q}]",
        "E exp(q lam |phi|^2) = prod_n (1 - q lam mu_n)^-1",
        moment.value, float(np.mean(amp)), float(np.std(amp, ddof=1)/math.sqrt(n)),
        check=Check.MATCH
    ))
    return rows
