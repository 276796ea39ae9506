import math

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from pygfc.conditioning import (
    BudgetExhausted, ConditionalEnsemble, ConditioningError, ConditioningMethod,
    DecompositionSampler, EstimationError, RejectionSampler, effective_sample_size,
    estimate, indicator, psi_conditional, sample_conditional_decomposition,
    sample_conditional_rejection, summarize, tilt_normalizer, truncated_gamma_sample
)
from pygfc.io import SampleColumns, SummaryColumns, eps_column, se
from pygfc.kernels import make_kernel
from pygfc.spectral import build_grid, decompose
from pygfc.structs import Estimate, FieldKind

def exact_reference_tail(r):
    return 2*math.exp(-r) - math.exp(-2*r)

class TestTruncatedGamma:

    def test_untruncated_is_gamma(self):
        v = truncated_gamma_sample(2, 1.5, 0.0, np.random.default_rng(0), size=100_000)
        assert stats.kstest(v, stats.gamma(a=2, scale=1.5).cdf).statistic < 0.01

    def test_memoryless(self):
        v = truncated_gamma_sample(1, 2.0, 3.0, np.random.default_rng(1), size=50_000)
        assert np.all(v >= 3.0)
        excess = v - 3.0
        assert abs(excess.mean() - 2.0) < 3*excess.std()/math.sqrt(excess.size)

    def test_conditional_mean(self):
        # int_1^inf v^2 e^-v dv / int_1^inf v e^-v dv = 5/2
        v = truncated_gamma_sample(2, 1.0, 1.0, np.random.default_rng(2), size=100_000)
        assert abs(v.mean() - 2.5) < 3*v.std()/math.sqrt(v.size)

    def test_scalar_and_array_lower(self):
        rng = np.random.default_rng(3)
        x = truncated_gamma_sample(3, 1.0, 20.0, rng)
        assert isinstance(x, float) and x >= 20.0
        lower = np.array([0.0, 5.0, 50.0])
        v = truncated_gamma_sample(1, 1.0, lower, rng)
        assert v.shape == (3,) and np.all(v >= lower)

    @pytest.mark.parametrize("lower", [-1.0, 800.0])
    def test_invalid_lower(self, lower):
        with pytest.raises(ConditioningError):
            truncated_gamma_sample(1, 1.0, lower, np.random.default_rng(0))

def test_tilt_normalizer():
    assert tilt_normalizer(np.array([1.0, 0.5]), 1) == pytest.approx(2.0)
    assert tilt_normalizer(np.array([1.0, 1.0, 0.25]), 2) == pytest.approx(4/3)
    assert tilt_normalizer(np.array([1.0]), 1) == 1.0

class TestRejection:

    def test_zero_threshold_accepts_everything(self, reference):
        ens = sample_conditional_rejection(reference, 0.0, 500, seed=1)
        assert ens.n == 500
        assert ens.acceptance_rate == 1.0
        assert ens.p_event == Estimate(1.0, 0.0)

    def test_exact_tail(self, reference):
        ens = sample_conditional_rejection(reference, 5.0, 2000, seed=2)
        exact = exact_reference_tail(5.0)
        assert exact == pytest.approx(0.013430, abs=1e-6)
        assert ens.p_event.within(exact, nse=4)
        assert ens.attempts % 8192 == 0
        assert np.all(ens.frame[SampleColumns.NORM2_SQ.value] > 5.0)
        assert_allclose(ens.frame[SampleColumns.SAMPLE_ID.value], np.arange(2000))

    def test_budget_exhausted(self, reference):
        with pytest.raises(BudgetExhausted) as info:
            sample_conditional_rejection(reference, 50.0, 10, seed=3, budget=20_000)
        assert info.value.attempts == 20_000
        assert info.value.accepted == 0
        assert isinstance(info.value, ConditioningError)

    def test_invalid_threshold(self, reference):
        with pytest.raises(ConditioningError):
            sample_conditional_rejection(reference, -1.0, 10, seed=0)
        with pytest.raises(ConditioningError):
            sample_conditional_rejection(reference, math.inf, 10, seed=0)

class TestDecomposition:

    def test_exact_tail(self, reference):
        ens = sample_conditional_decomposition(reference, 5.0, 5000, seed=4)
        assert ens.p_event.within(exact_reference_tail(5.0), nse=4)
        assert ens.method == "decomposition"

    def test_event_and_weights(self, reference):
        ens = sample_conditional_decomposition(reference, 10.0, 5000, seed=5)
        assert np.all(ens.frame[SampleColumns.NORM2_SQ.value] > 10.0)
        w = ens.weights
        assert np.all(w > 0) and np.all(w <= 1.0)

    def test_deep_threshold(self, reference):
        ens = sample_conditional_decomposition(reference, 10.0, 10_000, seed=6)
        assert ens.ess/ens.n >= 0.2
        p = ens.p_event
        assert p.value/exact_reference_tail(10.0) == pytest.approx(1.0, abs=0.05)
        assert p.se/p.value < 0.02

    def test_rank_one(self, rank_one):
        ens = sample_conditional_decomposition(rank_one, 3.0, 2000, seed=7)
        assert ens.p_event.value == pytest.approx(math.exp(-3.0))
        assert ens.p_event.se == 0.0
        assert np.all(ens.weights == 1.0)
        assert np.all(ens.frame[SampleColumns.PAR_SQ.value] > 3.0)
        assert np.all(ens.frame[SampleColumns.PERP_SQ.value] == 0.0)

    def test_degenerate_agrees_with_rejection(self, degenerate):
        dec = sample_conditional_decomposition(degenerate, 4.0, 5000, seed=8)
        rej = sample_conditional_rejection(degenerate, 4.0, 5000, seed=9)
        assert abs(dec.p_event.value - rej.p_event.value) < 4*math.hypot(
            dec.p_event.se, rej.p_event.se
        )
        par = estimate(dec, SampleColumns.PAR_SQ)
        par_rej = estimate(rej, SampleColumns.PAR_SQ)
        assert abs(par.value - par_rej.value) < 4*math.hypot(par.se, par_rej.se)

    def test_merged_top_group(self):
        # kappa_2 within the degeneracy tolerance of kappa_1
        kernel = make_kernel({"family": "mercer-synthetic", "mercer_eigs": [1.0, 0.9996, 0.5]})
        decomp = decompose(kernel, build_grid(64), degeneracy_tol=5e-4)
        assert decomp.g1 == 2
        assert decomp.eigenvalues[1] < decomp.kappa1
        phi = sample_conditional_decomposition(decomp, 5.0, 5000, seed=13)
        assert np.all(phi.frame[SampleColumns.NORM2_SQ.value] > 5.0)
        psi = psi_conditional(decomp, 5.0, 5000, seed=14)
        assert np.all(psi.frame[SampleColumns.PSI_NORM2_SQ.value] > 5.0)

    def test_njobs_independent(self, reference):
        a = sample_conditional_decomposition(reference, 5.0, 3000, seed=10, chunk_size=1000)
        b = sample_conditional_decomposition(reference, 5.0, 3000, seed=10, njobs=2, chunk_size=1000)
        assert a.frame.equals(b.frame)
        assert a.p_event == b.p_event

    @pytest.mark.parametrize("r", [0.0, -2.0])
    def test_needs_positive_threshold(self, reference, r):
        with pytest.raises(ConditioningError):
            sample_conditional_decomposition(reference, r, 100, seed=0)

class TestPsi:

    def test_c_infinity(self, reference):
        phi = sample_conditional_decomposition(reference, 15.0, 10_000, seed=11)
        psi = psi_conditional(reference, 15.0, 10_000, seed=12)
        assert psi.kind is FieldKind.PSI
        assert psi.event_column == SampleColumns.PSI_NORM2_SQ.value
        assert np.all(psi.frame[SampleColumns.PSI_NORM2_SQ.value] > 15.0)
        ratio = psi.p_event.value/phi.p_event.value
        assert ratio == pytest.approx(1.70711, rel=0.02)

    def test_needs_positive_threshold(self, reference):
        with pytest.raises(ConditioningError):
            psi_conditional(reference, 0.0, 100, seed=0)

def _ensemble(values, weights):
    frame = pd.DataFrame({
        SampleColumns.NORM2_SQ.value: values,
        SampleColumns.WEIGHT.value: weights,
    })
    return ConditionalEnsemble(
        r=0.0, method="test", frame=frame, p_event=Estimate(1.0),
        kappa1=1.0, attempts=len(frame)
    )

class TestEstimate:

    def test_unit_weights(self):
        x = np.random.default_rng(0).normal(size=400)
        est = estimate(_ensemble(x, np.ones(400)), SampleColumns.NORM2_SQ)
        assert est.value == pytest.approx(x.mean())
        assert est.se == pytest.approx(x.std()/math.sqrt(400))

    def test_weighted(self):
        ens = _ensemble(np.arange(40, dtype=float), np.tile([1.0, 3.0], 20))
        est = estimate(ens, lambda f: f[SampleColumns.NORM2_SQ.value].to_numpy()*2)
        w = np.tile([1.0, 3.0], 20)
        assert est.value == pytest.approx(2*np.sum(w*np.arange(40))/w.sum())

    def test_indicator(self):
        ens = _ensemble(np.arange(100, dtype=float), np.ones(100))
        est = estimate(ens, indicator(SampleColumns.NORM2_SQ, 74.5))
        assert est.value == pytest.approx(0.25)

    def test_ess_floor(self):
        w = np.full(100, 1e-6)
        w[0] = 1.0
        assert effective_sample_size(w) < 2
        with pytest.raises(EstimationError):
            estimate(_ensemble(np.ones(100), w), SampleColumns.NORM2_SQ)

    def test_unknown_column(self):
        with pytest.raises(EstimationError):
            estimate(_ensemble(np.ones(50), np.ones(50)), "nope")

def test_summarize(reference):
    ens = sample_conditional_decomposition(reference, 5.0, 2000, seed=13)
    row = summarize(ens, [0.3, 0.5], sup_eps=0.1)
    for col in SummaryColumns:
        assert col.value in row
    overlap = [row[eps_column("p_overlap", eps)] for eps in (0.3, 0.5)]
    assert 0 <= overlap[1] <= overlap[0] <= 1
    assert row[se(SummaryColumns.E_PAR_SQ)] > 0
    assert row[SummaryColumns.METHOD.value] == "decomposition"

class TestMethods:

    def test_from_name(self):
        assert ConditioningMethod.from_name("rejection") is ConditioningMethod.REJECTION
        assert ConditioningMethod.DECOMPOSITION.value is DecompositionSampler
        with pytest.raises(ValueError):
            ConditioningMethod.from_name("mcmc")

    def test_sampler_objects(self, reference):
        ens = RejectionSampler(budget=100_000).sample(reference, 1.0, 100, seed=14)
        assert ens.method == RejectionSampler.NAME
        ens = DecompositionSampler().sample(reference, 1.0, 100, seed=14)
        assert ens.method == DecompositionSampler.NAME
