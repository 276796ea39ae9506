from .ensemble import (
    ConditionalEnsemble, EstimationError, ESS_FLOOR,
    effective_sample_size, estimate, indicator, psi_perp_ratio, summarize
)
from .samplers import (
    ConditioningError, BudgetExhausted, REJECTION_BUDGET,
    truncated_gamma_sample, tilt_normalizer,
    sample_conditional_rejection, sample_conditional_decomposition,
    psi_conditional
)
from .methods import (
    ConditioningMethod, RejectionSampler, DecompositionSampler,
    print_sampler_stats, record_fallback
)
