from .fields import (
    SamplingError, CoefficientStream, CoefficientDraw,
    CoupledSample, NormRecord,
    draw_coefficients, synthesize, norms, norm_table,
    psi_weights, quadrature_norm_sq, audit_sup_norm
)
from .batch import synthesize_batch, sample_unconditional
