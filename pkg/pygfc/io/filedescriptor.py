"""
Column descriptors for the tabular outputs.

Sample batches and conditional ensembles are pandas
DataFrames with the columns of `SampleColumns`.
Per-r summaries use `SummaryColumns`, the concentration
table `ConcentrationColumns`. Columns that depend on a
threshold eps are built with `eps_column`.
"""
from enum import Enum

class SampleColumns(Enum):
    """
    One row per coupled sample. All norms are L2 on
    [0,1] unless the name says sup.
    """
    __order__ = (
        "SAMPLE_ID NORM2_SQ PAR_SQ PERP_SQ PERP_HAT "
        "SUP_PERP_HAT SUP_PHI PSI_NORM2_SQ PSI_PERP "
        "PSI_PERP_SQ WEIGHT"
    )
    SAMPLE_ID: str = "sample_id"
    NORM2_SQ: str = "norm2_sq"          # ||phi||^2
    PAR_SQ: str = "par_sq"              # ||phi_par||^2
    PERP_SQ: str = "perp_sq"            # ||phi_perp||^2
    PERP_HAT: str = "perp_hat"          # ||phi_hat_perp||_2
    SUP_PERP_HAT: str = "sup_perp_hat"  # ||phi_hat_perp||_inf
    SUP_PHI: str = "sup_phi"            # ||phi||_inf
    PSI_NORM2_SQ: str = "psi_norm2_sq"  # ||psi||^2
    PSI_PERP: str = "psi_perp"          # ||psi_perp||_2
    PSI_PERP_SQ: str = "psi_perp_sq"    # ||psi_perp||^2
    WEIGHT: str = "weight"

# Columns written to the per-sample CSV dump
SAMPLE_DUMP = [
    SampleColumns.SAMPLE_ID,
    SampleColumns.NORM2_SQ,
    SampleColumns.PAR_SQ,
    SampleColumns.PERP_SQ,
    SampleColumns.PERP_HAT,
    SampleColumns.SUP_PERP_HAT,
    SampleColumns.PSI_NORM2_SQ,
    SampleColumns.PSI_PERP,
    SampleColumns.WEIGHT,
]

class SummaryColumns(Enum):
    """
    One row per conditioning threshold r.
    Every estimate column has a twin with suffix ``_se``.
    """
    __order__ = (
        "R METHOD N ESS ATTEMPTS ACCEPTANCE P_EVENT "
        "E_SUP_PERP E_PAR_SQ E_PERP_SQ P_SUP_EPS E_PSI_PERP_RATIO"
    )
    R: str = "r"
    METHOD: str = "method"
    N: str = "n"
    ESS: str = "ess"
    ATTEMPTS: str = "attempts"
    ACCEPTANCE: str = "acceptance_rate"
    P_EVENT: str = "p_event"
    E_SUP_PERP: str = "e_sup_perp"
    E_PAR_SQ: str = "e_par_sq"
    E_PERP_SQ: str = "e_perp_sq"
    P_SUP_EPS: str = "p_sup_eps"
    E_PSI_PERP_RATIO: str = "e_psi_perp_ratio"

class ConcentrationColumns(Enum):
    """
    Columns of the concentration table, one row per r.
    """
    __order__ = (
        "R P_OVERLAP OVERLAP_BOUND E_SUP_PERP SUP_MEAN_BOUND "
        "P_EVENT TAIL_ASYMPTOTE"
    )
    R: str = "r"
    P_OVERLAP: str = "p_overlap"
    OVERLAP_BOUND: str = "overlap_bound"
    E_SUP_PERP: str = "e_sup_perp"
    SUP_MEAN_BOUND: str = "sup_mean_bound"
    P_EVENT: str = "p_event"
    TAIL_ASYMPTOTE: str = "tail_asymptote"

def se(column: str | Enum) -> str:
    """Name of the standard error twin of `column`"""
    name = column.value if isinstance(column, Enum) else column
    return f"{name}_se"

def eps_column(column: str | Enum, eps: float) -> str:
    """
    Name of a column evaluated at threshold `eps`,
    e.g. ``p_overlap_eps0.3``.
    """
    name = column.value if isinstance(column, Enum) else column
    return f"{name}_eps{eps:g}"
