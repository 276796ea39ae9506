"""
End-to-end experiment driver.

`run_experiment` turns one configuration into the full
set of output files:

    spectrum.json            decomposition export
    ensemble_r<r>.csv        per-sample dump of each r point
    ensemble_summary.csv     one summary row per r
    psi_summary.csv          psi-field tails at t = r/kappa_1
    condensation.csv         E_par(r), E_perp(r) and their flags
    concentration.csv/.dat   concentration table and plot data
    analysis.json/.txt       closed forms against estimates
    manifest.json            config, its hash, versions and
                             file checksums

Every random stream is a fixed child of the configured
seed, so identical configurations give identical bytes.
"""
from __future__ import annotations

import hashlib
import json
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import scipy

from .. import __version__
from ..analysis import (
    FLOAT_FORMAT, AnalysisReport, SpectrumSummary, condensation_curves,
    emit_concentration_table, exact_tail
)
from ..conditioning import (
    BudgetExhausted, ConditionalEnsemble, ConditioningMethod,
    estimate, print_sampler_stats, psi_conditional, record_fallback,
    sample_conditional_decomposition, summarize
)
from ..io import SAMPLE_DUMP, SummaryColumns, se
from ..logger import logger
from ..sampling import sample_unconditional
from ..spectral import (
    SpectralDecomposition, build_grid, decompose, export_spectrum,
    gram_error, reconstruction_error, trace_error
)
from ..utils import Timer, child_sequence, dump_json
from .config import ExperimentConfig, config_from_dict
from .rows import (
    PSI_MEAN_RATIO, PSI_P, PSI_R, PSI_T,
    psi_rows, summary_rows, unconditional_rows
)

# Auto selection picks rejection above this event probability
REJECTION_MIN_P = 1e-3
PILOT_SAMPLES = 2000

# Child streams of the run seed
UNCONDITIONAL_STREAM = 1_000_000
# Child streams of each r point's seed
MAIN, PILOT, PSI = 0, 1, 2

SPECTRUM_FILE = "spectrum.json"
SUMMARY_FILE = "ensemble_summary.csv"
PSI_FILE = "psi_summary.csv"
CONDENSATION_FILE = "condensation.csv"
CONCENTRATION_STEM = "concentration"
ANALYSIS_STEM = "analysis"
MANIFEST_FILE = "manifest.json"

@dataclass
class RunResult:
    output_dir: Path
    files: list[Path]
    report: AnalysisReport
    summary: pd.DataFrame
    concentration: pd.DataFrame | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.report.passed

def ensemble_file(r: float) -> str:
    return f"ensemble_r{r:g}.csv"

def versions() -> dict[str, str]:
    return {
        "pygfc": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
    }

def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()

def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path

def build_decomposition(config: ExperimentConfig) -> SpectralDecomposition:
    kernel = config.build_kernel()
    grid = build_grid(config.grid_size)
    with Timer(f"Decomposition of {kernel!r}"):
        return decompose(kernel, grid, config.truncation_tol, config.degeneracy_tol)

def spectrum_document(decomp: SpectralDecomposition) -> dict[str, Any]:
    doc = export_spectrum(decomp)
    doc["n_modes"] = decomp.n_modes
    doc["reconstruction_error"] = reconstruction_error(decomp)
    doc["gram_error"] = gram_error(decomp)
    doc["trace_error"] = trace_error(decomp)
    return doc

def select_method(decomp: SpectralDecomposition,
                  config: ExperimentConfig,
                  r: float,
                  point_seed: np.random.SeedSequence) -> ConditioningMethod:
    """
    Rejection when the event probability is at least
    REJECTION_MIN_P, else decomposition. The probability
    comes from the closed form if there is one, from a
    pilot run of the decomposition sampler otherwise.
    """
    if config.method != "auto":
        return ConditioningMethod.from_name(config.method)
    p = exact_tail(r, SpectrumSummary.from_decomposition(decomp))
    source = "closed form"
    if p is None:
        pilot = sample_conditional_decomposition(
            decomp, r, PILOT_SAMPLES, child_sequence(point_seed, PILOT)
        )
        p, source = pilot.p_event.value, "pilot"
    method = (
        ConditioningMethod.REJECTION if p >= REJECTION_MIN_P
        else ConditioningMethod.DECOMPOSITION
    )
    logger.info(f"r={r:g}: P(event)={p:.3e} ({source}), using {method.value.NAME}.")
    return method

def condition_point(decomp: SpectralDecomposition,
                    config: ExperimentConfig,
                    index: int,
                    r: float) -> ConditionalEnsemble:
    """
    Conditional ensemble for the `index`-th threshold.
    With method auto, a rejection run that exhausts its
    budget falls back to the decomposition sampler.
    """
    point_seed = child_sequence(config.seed, index)
    method = select_method(decomp, config, r, point_seed)
    assert method in ConditioningMethod, \
        f"Unknown sampler {method!r}. Choose from {list(ConditioningMethod)}."
    sampler = method.value(budget=config.rejection_budget)
    try:
        return sampler.sample(
            decomp, r, config.samples_per_point,
            child_sequence(point_seed, MAIN), njobs=config.njobs
        )
    except BudgetExhausted as e:
        if config.method != "auto":
            raise
        logger.warning(f"{e} Falling back to the decomposition sampler.")
        record_fallback()
        sampler = ConditioningMethod.DECOMPOSITION.value()
        return sampler.sample(
            decomp, r, config.samples_per_point,
            child_sequence(point_seed, MAIN), njobs=config.njobs
        )

def psi_point(decomp: SpectralDecomposition,
              config: ExperimentConfig,
              index: int,
              r: float) -> dict[str, float]:
    """
    P(||psi||^2 > t) and E(||psi||^2 | ||psi||^2 > t)/t
    at t = r/kappa_1.
    """
    t = r/decomp.kappa1
    ens = psi_conditional(
        decomp, t, config.samples_per_point,
        child_sequence(child_sequence(config.seed, index), PSI), njobs=config.njobs
    )
    ratio = estimate(ens, lambda f: f[ens.event_column].to_numpy()/t, config.ess_floor)
    return {
        PSI_R: r, PSI_T: t,
        PSI_P: ens.p_event.value, se(PSI_P): ens.p_event.se,
        PSI_MEAN_RATIO: ratio.value, se(PSI_MEAN_RATIO): ratio.se,
    }

def run_experiment(config: ExperimentConfig) -> RunResult:
    """
    Run the configured sweep and write all output
    files. On failure, the files written so far are
    removed and the error is re-raised.
    """
    out = Path(config.output_dir)
    created = not out.exists()
    out.mkdir(parents=True, exist_ok=True)
    files: list[Path] = []
    try:
        result = _run(config, out, files)
    except BaseException:
        logger.error(f"Run failed, removing {len(files)} partial output file(s).")
        for path in files:
            path.unlink(missing_ok=True)
        if created:
            shutil.rmtree(out, ignore_errors=True)
        raise
    print_sampler_stats()
    return result

def _run(config: ExperimentConfig, out: Path, files: list[Path]) -> RunResult:
    decomp = build_decomposition(config)
    spectrum = SpectrumSummary.from_decomposition(decomp)

    files.append(out/SPECTRUM_FILE)
    dump_json(spectrum_document(decomp), files[-1])

    rows, psi_records, ensembles = [], [], []
    for i, r in enumerate(config.r_values):
        ens = condition_point(decomp, config, i, r)
        ensembles.append(ens)
        files.append(write_frame(
            ens.frame[[c.value for c in SAMPLE_DUMP]], out/ensemble_file(r)
        ))
        rows.append(summarize(ens, config.eps_values, config.sup_eps, config.ess_floor))
        psi_records.append(psi_point(decomp, config, i, r))

    summary = pd.DataFrame(rows)
    psi_summary = pd.DataFrame(psi_records)
    files.append(write_frame(summary, out/SUMMARY_FILE))
    files.append(write_frame(psi_summary, out/PSI_FILE))
    condensation = condensation_curves(ensembles, spectrum, config.ess_floor)
    files.append(write_frame(condensation, out/CONDENSATION_FILE))

    concentration = None
    if len(summary) >= 2:
        concentration = emit_concentration_table(
            summary, spectrum, decomp.B, config.eps_values, config.sup_eps,
            out/CONCENTRATION_STEM, n_mc=config.overlap_mc_samples, seed=config.seed
        )
        files += [out/f"{CONCENTRATION_STEM}.csv", out/f"{CONCENTRATION_STEM}.dat"]
    else:
        logger.warning("A single r value: no concentration table.")

    unconditional = sample_unconditional(
        decomp, config.samples_per_point,
        child_sequence(config.seed, UNCONDITIONAL_STREAM), njobs=config.njobs
    )
    report = AnalysisReport(unconditional_rows(unconditional, spectrum, decomp.eigenvalues))
    report.extend(summary_rows(
        summary, spectrum, decomp.B, config.eps_values, config.sup_eps,
        config.overlap_mc_samples, config.seed
    ))
    report.extend(psi_rows(summary, psi_summary, spectrum))
    files.append(out/f"{ANALYSIS_STEM}.json")
    report.to_json(files[-1])
    files.append(out/f"{ANALYSIS_STEM}.txt")
    report.to_text(files[-1])

    files.append(out/MANIFEST_FILE)
    write_manifest(config, files[:-1], files[-1])
    logger.info(
        f"Run complete: {len(report.rows) - report.n_failed}/{len(report.rows)} "
        f"checks passed, outputs in {str(out)!r}."
    )
    return RunResult(out, list(files), report, summary, concentration,
                     extra={"ensembles": ensembles, "psi_summary": psi_summary,
                            "condensation": condensation})

def write_manifest(config: ExperimentConfig, files: list[Path], path: Path) -> None:
    manifest = {
        "config": config.as_dict(),
        "config_sha256": config.digest(),
        "versions": versions(),
        "files": {p.name: _sha256(p) for p in files},
    }
    dump_json(manifest, path)

def read_run(directory: str | Path) -> tuple[ExperimentConfig, pd.DataFrame, pd.DataFrame, dict]:
    """
    Config, summary tables and spectrum document of a
    finished run. CSVs are read with the pyarrow engine.
    """
    directory = Path(directory)
    manifest = json.loads((directory/MANIFEST_FILE).read_text())
    config = config_from_dict(manifest)
    summary = pd.read_csv(directory/SUMMARY_FILE, engine="pyarrow")
    check_summary_columns(summary)
    psi_summary = pd.read_csv(directory/PSI_FILE, engine="pyarrow")
    spectrum = json.loads((directory/SPECTRUM_FILE).read_text())
    return config, summary, psi_summary, spectrum

def aggregate_report(directory: str | Path, out: str | Path | None = None) -> AnalysisReport:
    """
    Rebuild the summary-based part of the analysis
    report from the files of a finished run and write
    `report.json` and `report.txt` next to them (or
    into `out`).
    """
    directory = Path(directory)
    config, summary, psi_summary, doc = read_run(directory)
    spectrum = SpectrumSummary.from_groups((g["kappa"], g["g"]) for g in doc["groups"])
    report = AnalysisReport(summary_rows(
        summary, spectrum, float(doc["B"]), config.eps_values, config.sup_eps,
        config.overlap_mc_samples, config.seed
    ))
    report.extend(psi_rows(summary, psi_summary, spectrum))
    target = Path(out) if out is not None else directory
    target.mkdir(parents=True, exist_ok=True)
    report.to_json(target/"report.json")
    report.to_text(target/"report.txt")
    if len(summary) >= 2:
        emit_concentration_table(
            summary, spectrum, float(doc["B"]), config.eps_values, config.sup_eps,
            target/"report_concentration", n_mc=config.overlap_mc_samples,
            seed=config.seed
        )
    return report

def check_summary_columns(summary: pd.DataFrame) -> None:
    missing = [c.value for c in SummaryColumns if c.value not in summary.columns]
    if missing:
        raise ValueError(f"Summary table lacks columns {missing}.")
