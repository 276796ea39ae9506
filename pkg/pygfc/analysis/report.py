"""
Pairing of closed-form values with Monte Carlo
estimates.

An `AnalysisReport` is a list of rows, each holding a
formula id, a short relation string, the closed-form
value, the Monte Carlo estimate with its standard error
and a verdict. Reports are written as JSON and as an
aligned text table.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable

import pandas as pd

from ..conditioning import ConditionalEnsemble, ESS_FLOOR, estimate
from ..io import ConcentrationColumns, SampleColumns, SummaryColumns, eps_column, se
from ..logger import logger
from ..utils import dump_json
from .closed_form import (
    AnalysisError, SpectrumLike, as_summary, overlap_bound,
    rho_perp_bound, sup_mean_bound, tail_asymptote, OVERLAP_MC_SAMPLES
)

# Standard errors of slack for bound verdicts
NSE = 3.0
FLOAT_FORMAT = "%.12g"

class Check(Enum):
    """
    How a row's verdict is decided.
    UPPER: estimate <= value + 3 se
    LOWER: estimate >= value - 3 se
    MATCH: |estimate - value| <= max(3 se, rtol |value|)
    RATIO: |estimate/value - 1| <= rtol
    """
    UPPER = "upper"
    LOWER = "lower"
    MATCH = "match"
    RATIO = "ratio"

@dataclass
class ReportRow:
    formula: str
    relation: str
    value: float
    estimate: float
    se: float = 0.0
    r: float | None = None
    check: Check = Check.UPPER
    rtol: float = 0.0
    nse: float = NSE
    verdict: bool = field(init=False)

    def __post_init__(self) -> None:
        self.verdict = self._decide()

    def _decide(self) -> bool:
        v, m, s = self.value, self.estimate, self.se
        if any(isinstance(x, float) and math.isnan(x) for x in (v, m, s)):
            return False
        match self.check:
            case Check.UPPER:
                return m <= v + self.nse*s
            case Check.LOWER:
                return m >= v - self.nse*s
            case Check.MATCH:
                return abs(m - v) <= max(self.nse*s, self.rtol*abs(v))
            case Check.RATIO:
                return v != 0 and abs(m/v - 1) <= self.rtol
        raise AnalysisError(f"Unknown check {self.check!r}.")

    def as_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["check"] = self.check.value
        return d

class AnalysisReport:
    """
    Ordered collection of report rows.
    """
    COLUMNS = ["formula", "relation", "r", "value", "estimate", "se", "check", "verdict"]

    def __init__(self, rows: Iterable[ReportRow] = ()) -> None:
        self.rows: list[ReportRow] = list(rows)

    def add(self, row: ReportRow) -> ReportRow:
        self.rows.append(row)
        if not row.verdict:
            logger.warning(
                f"Check failed: {row.formula} [{row.relation}] at r={row.r}: "
                f"estimate {row.estimate:.6g} (se {row.se:.2g}) vs {row.value:.6g}"
            )
        return row

    def extend(self, rows: Iterable[ReportRow]) -> None:
        for row in rows:
            self.add(row)

    @property
    def passed(self) -> bool:
        return all(row.verdict for row in self.rows)

    @property
    def n_failed(self) -> int:
        return sum(not row.verdict for row in self.rows)

    def to_frame(self) -> pd.DataFrame:
        records = [row.as_dict() for row in self.rows]
        return pd.DataFrame.from_records(records, columns=self.COLUMNS)

    def to_json(self, path: Path | None = None) -> str:
        doc = {
            "passed": self.passed,
            "n_rows": len(self.rows),
            "n_failed": self.n_failed,
            "rows": [row.as_dict() for row in self.rows],
        }
        return dump_json(doc, path)

    def to_text(self, path: Path | None = None) -> str:
        frame = self.to_frame()
        frame["verdict"] = frame["verdict"].map({True: "PASS", False: "FAIL"})
        text = frame.to_string(
            index=False, na_rep="-", float_format=lambda x: f"{x:.6g}"
        ) + "\n"
        text += f"\n{len(self.rows) - self.n_failed}/{len(self.rows)} checks passed\n"
        if path is not None:
            Path(path).write_text(text)
        return text

def condensation_curves(ensembles: list[ConditionalEnsemble],
                        spectrum: SpectrumLike,
                        ess_floor: float = ESS_FLOOR) -> pd.DataFrame:
    """
    Conditional means E_par(r) and E_perp(r) of the
    squared component norms over a sweep of r, with the
    condensation flags

        E_par(r) > r - rho_perp     (within 3 se)
        E_perp(r) <= rho_perp       (within 3 se)
        E_par(r) + E_perp(r) > r.
    """
    rho = rho_perp_bound(spectrum)
    rows = []
    for ens in ensembles:
        par = estimate(ens, SampleColumns.PAR_SQ, ess_floor)
        perp = estimate(ens, SampleColumns.PERP_SQ, ess_floor)
        rows.append({
            "r": ens.r,
            "e_par": par.value, "e_par_se": par.se,
            "e_perp": perp.value, "e_perp_se": perp.se,
            "rho_perp_bound": rho,
            "par_flag": par.value + NSE*par.se > ens.r - rho,
            "perp_flag": perp.value - NSE*perp.se <= rho,
            "sum_flag": par.value + perp.value > ens.r,
        })
    return pd.DataFrame(rows)

def emit_concentration_table(summary: pd.DataFrame,
                             spectrum: SpectrumLike,
                             B: float,
                             eps_values: list[float],
                             sup_eps: float,
                             path_stem: Path | None = None,
                             n_mc: int = OVERLAP_MC_SAMPLES,
                             seed: int = 0) -> pd.DataFrame:
    """
    Concentration table, one row per r: the overlap
    probabilities per eps next to their bounds, the mean
    sup-norm profile next to its finite-r bound, and the
    event probability next to its large-r asymptote.

    With `path_stem`, writes `<stem>.csv` and a
    whitespace-separated `<stem>.dat` for gnuplot.
    """
    if len(summary) < 2:
        raise AnalysisError("The concentration table needs at least two r values.")
    s = as_summary(spectrum)
    table = pd.DataFrame({ConcentrationColumns.R.value: summary[SummaryColumns.R.value]})
    for eps in eps_values:
        col = eps_column(ConcentrationColumns.P_OVERLAP, eps)
        table[col] = summary[col].to_numpy()
        table[se(col)] = summary[se(col)].to_numpy()
        table[eps_column(ConcentrationColumns.OVERLAP_BOUND, eps)] = [
            overlap_bound(r, eps, s, n_mc=n_mc, seed=seed).value
            for r in table[ConcentrationColumns.R.value]
        ]
    table[ConcentrationColumns.E_SUP_PERP.value] = summary[SummaryColumns.E_SUP_PERP.value].to_numpy()
    table[se(ConcentrationColumns.E_SUP_PERP)] = summary[se(SummaryColumns.E_SUP_PERP)].to_numpy()
    table[ConcentrationColumns.SUP_MEAN_BOUND.value] = [
        sup_mean_bound(sup_eps, B, ratio, p)
        for ratio, p in zip(summary[SummaryColumns.E_PSI_PERP_RATIO.value],
                            summary[SummaryColumns.P_SUP_EPS.value])
    ]
    table[ConcentrationColumns.P_EVENT.value] = summary[SummaryColumns.P_EVENT.value].to_numpy()
    table[se(ConcentrationColumns.P_EVENT)] = summary[se(SummaryColumns.P_EVENT)].to_numpy()
    table[ConcentrationColumns.TAIL_ASYMPTOTE.value] = [
        tail_asymptote(r, s) for r in table[ConcentrationColumns.R.value]
    ]
    if path_stem is not None:
        path_stem = Path(path_stem)
        table.to_csv(path_stem.with_suffix(".csv"), index=False, float_format=FLOAT_FORMAT)
        _write_plot_data(table, path_stem.with_suffix(".dat"))
    return table

def _write_plot_data(table: pd.DataFrame, path: Path) -> None:
    lines = ["# " + " ".join(table.columns)]
    for row in table.itertuples(index=False):
        lines.append(" ".join(FLOAT_FORMAT % float(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")
