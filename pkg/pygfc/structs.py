"""
Shared value types for pygfc.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

# Type aliases
Eigenvalues = np.ndarray   # shape (N,), descending, non-negative
ModeTable = np.ndarray     # shape (M, N), complex, column n = phi_n at nodes
Coefficients = np.ndarray  # shape (N,) or (n_samples, N), complex

# Largest grid the spectral module accepts
MAX_GRID_SIZE = 4096

class FieldKind(Enum):
    """
    Which of the two coupled fields a formula refers to.
    PHI is the field itself, PSI the field with
    coefficients scaled by (mu_n/kappa_1)^(1/4).
    """
    PHI = "phi"
    PSI = "psi"

    @classmethod
    def from_value(cls, value: str | FieldKind) -> FieldKind:
        if isinstance(value, FieldKind):
            return value
        for kind in cls:
            if kind.value == value:
                return kind
        raise ValueError(f"Field kind {value!r} not found.")

@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """
    Quadrature rule on [0,1].

    nodes: strictly increasing abscissas
    weights: positive weights summing to one
    """
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """
        Integrate grid values along the last axis.
        """
        return np.asarray(values) @ self.weights

    def __repr__(self) -> str:
        return f"<QuadratureGrid(M={self.size})>"

@dataclass(frozen=True)
class DegeneracyGroup:
    """
    One distinct eigenvalue kappa_j together
    with its multiplicity g_j and the indices
    of the modes that belong to it.
    """
    kappa: float
    g: int
    members: tuple[int, ...] = field(default_factory=tuple)

    def as_dict(self) -> dict:
        return {"kappa": float(self.kappa), "g": int(self.g)}

class Estimate(NamedTuple):
    """
    A point value with its standard error.
    Closed-form values carry ``se == 0``.
    """
    value: float
    se: float = 0.0

    def within(self, other: float, nse: float = 3.0) -> bool:
        """
        True if `other` lies within `nse` standard errors.
        """
        return abs(self.value - other) <= nse * self.se
