from .closed_form import (
    AnalysisError, SpectrumSummary, AmplifierMoment,
    parallel_tail, chernoff_bound, overlap_bound, hypoexponential_tail,
    exact_tail, tail_asymptote, c_infinity, rho_perp_bound,
    sup_mean_bound, amplifier_moment, as_summary
)
from .report import (
    Check, ReportRow, AnalysisReport,
    condensation_curves, emit_concentration_table, FLOAT_FORMAT
)
