from .covariance import (
    Kernel, KernelFamily, KernelError,
    make_kernel, eval_kernel, fourier_indices, fourier_mode
)
from .oracle import exponential_oracle, exponential_frequencies
