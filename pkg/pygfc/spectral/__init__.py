from .nystrom import (
    SpectralDecomposition, SpectralError,
    TRUNCATION_TOL, DEGENERACY_TOL,
    build_grid, decompose, group_degeneracies, tc_sqrt_profile,
    nystrom_interpolate, reconstruct_kernel, reconstruction_error,
    gram_error, export_spectrum, row_defect, trace_error
)
from .diagnostics import (
    SmoothnessDiagnostics, DiagnosticsError,
    smoothness_diagnostics, fourth_derivative, decay_slope
)
