__version__ = "0.4.2"

from .logger import logger

from .kernels import Kernel, KernelFamily, make_kernel, eval_kernel
from .spectral import SpectralDecomposition, decompose, build_grid, smoothness_diagnostics
from .sampling import synthesize, sample_unconditional
from .conditioning import (
    ConditionalEnsemble, ConditioningMethod, estimate,
    sample_conditional_rejection, sample_conditional_decomposition
)
from .analysis import AnalysisReport, SpectrumSummary
from .experiment import ExperimentConfig, load_config, run_experiment
from .structs import Estimate, FieldKind

logger.info(f"You are using pygfc version {__version__}")
