"""
Weighted conditional ensembles and self-normalized
estimation.

An ensemble holds one row per sample in a DataFrame
with the `SampleColumns` layout; the weight column
carries the importance weights (all ones for the
rejection sampler).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

import numpy as np
import pandas as pd

from ..io import ConcentrationColumns, SampleColumns, SummaryColumns, eps_column, se
from ..logger import logger
from ..structs import Estimate, FieldKind

# Smallest effective sample size an estimate is
# computed from.
ESS_FLOOR = 30

class EstimationError(ValueError):
    pass

Functional = str | Enum | Callable[[pd.DataFrame], np.ndarray]

def effective_sample_size(weights: np.ndarray) -> float:
    """
    Kish effective sample size (sum w)^2 / sum w^2.
    Zero for an empty or all-zero weight vector.
    """
    w = np.asarray(weights, dtype=float)
    s2 = math.fsum((w*w).tolist())
    if s2 == 0:
        return 0.0
    return math.fsum(w.tolist())**2/s2

@dataclass(eq=False)
class ConditionalEnsemble:
    """
    Samples from the law of the field given that its
    squared L2 norm exceeds `r`.

    kind: which norm the event is on. PHI for
        ||phi||^2 > r, PSI for ||psi||^2 > r.
    p_event: estimate of the event probability
    attempts: unconditional draws consumed
        (rejection only, else equal to n)
    """
    r: float
    method: str
    frame: pd.DataFrame
    p_event: Estimate
    kappa1: float
    attempts: int
    kind: FieldKind = FieldKind.PHI
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.frame)

    @property
    def weights(self) -> np.ndarray:
        return self.frame[SampleColumns.WEIGHT.value].to_numpy()

    @property
    def ess(self) -> float:
        return effective_sample_size(self.weights)

    @property
    def acceptance_rate(self) -> float:
        """Accepted over attempted draws (1 for weighted samplers)"""
        accepted = self.extra.get("accepted", self.n)
        return accepted/self.attempts if self.attempts else float("nan")

    @property
    def event_column(self) -> str:
        if self.kind is FieldKind.PSI:
            return SampleColumns.PSI_NORM2_SQ.value
        return SampleColumns.NORM2_SQ.value

    def __repr__(self) -> str:
        return (
            f"<ConditionalEnsemble({self.kind.value}, r={self.r:g}, "
            f"method={self.method}, n={self.n}, ess={self.ess:.1f})>"
        )

def _values(ensemble: ConditionalEnsemble, functional: Functional) -> np.ndarray:
    if isinstance(functional, Enum):
        functional = functional.value
    if isinstance(functional, str):
        if functional not in ensemble.frame.columns:
            raise EstimationError(f"Unknown sample column {functional!r}.")
        return ensemble.frame[functional].to_numpy(dtype=float)
    values = np.asarray(functional(ensemble.frame), dtype=float)
    if values.shape != (ensemble.n,):
        raise EstimationError(
            f"Functional returned shape {values.shape}, expected ({ensemble.n},)."
        )
    return values

def estimate(ensemble: ConditionalEnsemble,
             functional: Functional,
             ess_floor: float = ESS_FLOOR) -> Estimate:
    """
    Self-normalized estimate of E[f | event]

        theta = sum_i w_i f_i / sum_i w_i

    with the delta-method standard error

        se^2 = sum_i w_i^2 (f_i - theta)^2 / (sum_i w_i)^2.

    `functional` is a column name of the ensemble
    frame or a vectorized callable on the frame.
    Indicator functionals give conditional probabilities.
    """
    ess = ensemble.ess
    if ess < ess_floor:
        raise EstimationError(
            f"Effective sample size {ess:.1f} is below the floor of "
            f"{ess_floor} for {ensemble!r}."
        )
    f = _values(ensemble, functional)
    w = ensemble.weights
    if np.any(np.isnan(f[w > 0])):
        raise EstimationError("Functional is undefined on a weighted sample.")
    f = np.where(w > 0, f, 0.0)
    sw = math.fsum(w.tolist())
    theta = math.fsum((w*f).tolist())/sw
    var = math.fsum((w*w*(f - theta)**2).tolist())/sw**2
    return Estimate(theta, math.sqrt(var))

def indicator(column: str | Enum, threshold: float) -> Callable[[pd.DataFrame], np.ndarray]:
    """1{column > threshold} as a functional"""
    name = column.value if isinstance(column, Enum) else column
    def _indicator(frame: pd.DataFrame) -> np.ndarray:
        return (frame[name].to_numpy() > threshold).astype(float)
    return _indicator

def psi_perp_ratio(ensemble: ConditionalEnsemble) -> Callable[[pd.DataFrame], np.ndarray]:
    """||psi_perp||^2/(r/kappa_1) as a functional"""
    scale = ensemble.r/ensemble.kappa1
    def _ratio(frame: pd.DataFrame) -> np.ndarray:
        return frame[SampleColumns.PSI_PERP_SQ.value].to_numpy()/scale
    return _ratio

def summarize(ensemble: ConditionalEnsemble,
              eps_values: list[float],
              sup_eps: float,
              ess_floor: float = ESS_FLOOR) -> dict[str, Any]:
    """
    One summary row of the ensemble: event probability,
    the concentration estimates per eps, the sup-norm
    profile estimates and the condensation means, each
    with its standard error.
    """
    row: dict[str, Any] = {
        SummaryColumns.R.value: ensemble.r,
        SummaryColumns.METHOD.value: ensemble.method,
        SummaryColumns.N.value: ensemble.n,
        SummaryColumns.ESS.value: ensemble.ess,
        SummaryColumns.ATTEMPTS.value: ensemble.attempts,
        SummaryColumns.ACCEPTANCE.value: ensemble.acceptance_rate,
        SummaryColumns.P_EVENT.value: ensemble.p_event.value,
        se(SummaryColumns.P_EVENT): ensemble.p_event.se,
    }
    estimates: dict[str, Functional] = {
        SummaryColumns.E_SUP_PERP.value: SampleColumns.SUP_PERP_HAT,
        SummaryColumns.E_PAR_SQ.value: SampleColumns.PAR_SQ,
        SummaryColumns.E_PERP_SQ.value: SampleColumns.PERP_SQ,
        SummaryColumns.P_SUP_EPS.value: indicator(SampleColumns.SUP_PERP_HAT, sup_eps),
        SummaryColumns.E_PSI_PERP_RATIO.value: psi_perp_ratio(ensemble),
    }
    for eps in eps_values:
        estimates[eps_column(ConcentrationColumns.P_OVERLAP, eps)] = indicator(
            SampleColumns.PERP_HAT, eps
        )
    for name, functional in estimates.items():
        value, err = estimate(ensemble, functional, ess_floor)
        row[name] = value
        row[se(name)] = err
    logger.debug(f"Summary of {ensemble!r}: p_event={ensemble.p_event.value:.4e}")
    return row
