import pytest

from pygfc.analysis import SpectrumSummary
from pygfc.kernels import make_kernel
from pygfc.spectral import build_grid, decompose

def mercer(eigs, M=64):
    kernel = make_kernel({"family": "mercer-synthetic", "mercer_eigs": eigs})
    return decompose(kernel, build_grid(M))

@pytest.fixture(scope="session")
def reference():
    """Two simple modes, kappa_1 = 1 and kappa_2 = 0.5"""
    return mercer([1.0, 0.5])

@pytest.fixture(scope="session")
def degenerate():
    """Doubly degenerate top eigenvalue"""
    return mercer([1.0, 1.0, 0.25])

@pytest.fixture(scope="session")
def rank_one():
    return mercer([1.0])

@pytest.fixture(scope="session")
def reference_spectrum():
    return SpectrumSummary.from_groups([(1.0, 1), (0.5, 1)])

@pytest.fixture(scope="session")
def exponential():
    kernel = make_kernel({"family": "exponential", "ell": 1.0, "sigma2": 1.0})
    return decompose(kernel, build_grid(512))
