import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate

from pygfc.kernels import (
    KernelError, KernelFamily, eval_kernel, exponential_frequencies,
    exponential_oracle, fourier_indices, make_kernel
)

SPECS = [
    {"family": "exponential", "ell": 0.5, "sigma2": 2.0},
    {"family": "squared-exponential", "ell": 0.3},
    {"family": "mercer-synthetic", "mercer_eigs": [1.0, 0.5, 0.25]},
]

@pytest.mark.parametrize("spec", SPECS)
def test_gram_is_hermitian_and_psd(spec):
    kernel = make_kernel(spec)
    x = np.sort(np.random.default_rng(3).random(40))
    G = kernel.gram(x)
    assert_allclose(G, G.conj().T, atol=1e-14)
    assert np.linalg.eigvalsh(G).min() >= -1e-10*kernel.scale

def test_diagonal_and_scale():
    kernel = make_kernel(SPECS[0])
    x = np.linspace(0, 1, 5)
    assert_allclose(kernel.diagonal(x), 2.0)
    assert_allclose(np.real(np.diag(kernel.gram(x))), 2.0)
    mercer = make_kernel(SPECS[2])
    assert_allclose(np.real(np.diag(mercer.gram(x))), 1.75)

def test_mercer_alias_and_basis():
    kernel = make_kernel({"family": "mercer", "mercer_eigs": [1.0, 0.5]})
    assert kernel.family is KernelFamily.MERCER
    assert kernel.mercer_basis == (0, 1)
    assert kernel.is_complex
    assert fourier_indices(5) == (0, 1, -1, 2, -2)

@pytest.mark.parametrize("spec, key", [
    ({"family": "matern"}, "family"),
    ({"ell": 1.0}, "family"),
    ({"family": "exponential", "ell": -1.0}, "ell"),
    ({"family": "exponential", "sigma2": 0}, "sigma2"),
    ({"family": "mercer-synthetic", "mercer_eigs": []}, "mercer_eigs"),
    ({"family": "mercer-synthetic", "mercer_eigs": [0.5, 1.0]}, "mercer_eigs"),
    ({"family": "mercer-synthetic", "mercer_eigs": [1.0, -0.1]}, "mercer_eigs"),
    ({"family": "mercer-synthetic", "mercer_eigs": [1.0, 0.5], "mercer_basis": [1, 1]}, "mercer_basis"),
])
def test_invalid_specs_name_their_key(spec, key):
    with pytest.raises(KernelError) as info:
        make_kernel(spec)
    assert info.value.key == key

def test_eval_kernel():
    kernel = make_kernel({"family": "exponential", "ell": 1.0})
    assert eval_kernel(kernel, 0.2, 0.7) == pytest.approx(math.exp(-0.5))
    assert eval_kernel(kernel, 0.3, 0.3) == pytest.approx(1.0)
    with pytest.raises(KernelError):
        eval_kernel(kernel, 1.5, 0.0)
    mercer = make_kernel({"family": "mercer-synthetic", "mercer_eigs": [1.0, 0.5]})
    value = eval_kernel(mercer, 0.1, 0.35)
    assert value == pytest.approx(1.0 + 0.5*np.exp(2j*np.pi*(0.1 - 0.35)))

class TestExponentialOracle:

    def test_frequencies_interleave(self):
        w = exponential_frequencies(1.0, 12)
        assert np.all(np.diff(w) > 0)
        assert w[0] < np.pi < w[1] < 2*np.pi

    def test_eigenvalues_descend(self):
        mu = exponential_oracle(1.0, 1.0, 20)
        assert np.all(np.diff(mu) < 0)
        assert mu[0] < 2.0

    def test_trace(self):
        # sum_n mu_n = int_0^1 C(x,x) dx = sigma2
        mu = exponential_oracle(1.0, 1.0, 4000)
        assert math.fsum(mu) == pytest.approx(1.0, abs=1e-3)

    def test_needs_positive_count(self):
        with pytest.raises(ValueError):
            exponential_frequencies(1.0, 0)

@pytest.mark.parametrize("spec, x, y, expected", [
    ({"family": "mercer-synthetic", "mercer_eigs": [2.0]}, 0.1, 0.9, 2.0),
    ({"family": "exponential", "ell": 1.0, "sigma2": 1.0}, 0.25, 0.75, math.exp(-0.5)),
    ({"family": "squared-exponential", "ell": 0.5}, 0.0, 1.0, math.exp(-2.0)),
    ({"family": "mercer-synthetic", "mercer_eigs": [1.0, 0.5]}, 0.4, 0.4, 1.5),
])
def test_point_values(spec, x, y, expected):
    kernel = make_kernel(spec)
    assert eval_kernel(kernel, x, y) == pytest.approx(expected)
    assert eval_kernel(kernel, y, x) == pytest.approx(np.conj(eval_kernel(kernel, x, y)))

@pytest.mark.parametrize("spec", SPECS)
@pytest.mark.parametrize("x", [0.0, 0.3, 1.0])
def test_row_integral(spec, x):
    kernel = make_kernel(spec)
    kink = [x] if 0 < x < 1 else None
    re, _ = integrate.quad(lambda y: np.real(kernel.gram([x], [y])[0, 0]), 0, 1, points=kink, epsabs=1e-13)
    im, _ = integrate.quad(lambda y: np.imag(kernel.gram([x], [y])[0, 0]), 0, 1, points=kink, epsabs=1e-13)
    assert kernel.row_integral([x])[0] == pytest.approx(re, abs=1e-11)
    assert im == pytest.approx(0.0, abs=1e-11)

def test_only_exponential_is_kinked():
    assert [make_kernel(spec).kinked for spec in SPECS] == [True, False, False]
