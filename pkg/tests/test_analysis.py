import json
import math

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from pygfc.analysis import (
    AnalysisError, AnalysisReport, Check, ReportRow, SpectrumSummary,
    amplifier_moment, c_infinity, chernoff_bound, condensation_curves,
    emit_concentration_table, exact_tail, hypoexponential_tail, overlap_bound,
    parallel_tail, rho_perp_bound, sup_mean_bound, tail_asymptote
)
from pygfc.conditioning import sample_conditional_decomposition
from pygfc.io import ConcentrationColumns, SummaryColumns, eps_column, se
from pygfc.kernels import make_kernel
from pygfc.spectral import build_grid, decompose

class TestSpectrumSummary:

    def test_reference_constants(self, reference_spectrum):
        s = reference_spectrum
        assert s.kappa1 == 1.0 and s.g1 == 1
        assert s.Z == pytest.approx(2.0)
        assert_allclose(s.tilted_kappas, [1.0])
        assert s.rho_perp == pytest.approx(2.0)
        assert s.c_infinity == pytest.approx(1.70711, rel=1e-5)

    def test_from_decomposition(self, reference, reference_spectrum):
        s = SpectrumSummary.from_decomposition(reference)
        assert_allclose(s.eigenvalues, reference_spectrum.eigenvalues, atol=1e-12)

    def test_from_eigenvalues_groups(self):
        s = SpectrumSummary.from_eigenvalues([0.25, 1.0, 1.0])
        assert s.g1 == 2
        assert_allclose(s.multiplicities, [1.0])
        assert_allclose(s.eigenvalues, [1.0, 1.0, 0.25])

    @pytest.mark.parametrize("groups", [[], [(0.5, 1), (1.0, 1)], [(1.0, 0)], [(-1.0, 1)]])
    def test_invalid(self, groups):
        with pytest.raises(AnalysisError):
            SpectrumSummary.from_groups(groups)

class TestTails:

    def test_exact_tail(self, reference_spectrum):
        assert exact_tail(5.0, reference_spectrum) == pytest.approx(0.013430, abs=1e-6)
        assert exact_tail(5.0, reference_spectrum) == pytest.approx(
            2*math.exp(-5) - math.exp(-10), rel=1e-12
        )
        assert exact_tail(0.0, reference_spectrum) == pytest.approx(1.0)

    def test_exact_tail_single_group(self):
        s = SpectrumSummary.from_groups([(2.0, 3)])
        x = 4.0/2.0
        assert exact_tail(4.0, s) == pytest.approx(math.exp(-x)*(1 + x + x*x/2))
        assert parallel_tail(4.0, 3, 2.0) == pytest.approx(exact_tail(4.0, s))

    def test_exact_tail_degenerate_has_no_closed_form(self):
        assert exact_tail(3.0, SpectrumSummary.from_groups([(1.0, 2), (0.25, 1)])) is None

    def test_hypoexponential(self):
        assert hypoexponential_tail(0.0, [1.0, 0.5, 0.2]) == pytest.approx(1.0)
        assert hypoexponential_tail(3.0, [2.0]) == pytest.approx(math.exp(-1.5))
        assert hypoexponential_tail(1.0, []) == 0.0

    def test_asymptotes(self, reference_spectrum):
        assert tail_asymptote(10.0, reference_spectrum) == pytest.approx(2*math.exp(-10))
        assert tail_asymptote(10.0, reference_spectrum, "psi") == pytest.approx(
            math.exp(-10)/(1 - math.sqrt(0.5))
        )
        ratio = (tail_asymptote(15.0, reference_spectrum, "psi")
                 /tail_asymptote(15.0, reference_spectrum))
        assert ratio == pytest.approx(c_infinity(reference_spectrum))
        # finite-r deviation of the exact tail
        assert exact_tail(10.0, reference_spectrum)/tail_asymptote(10.0, reference_spectrum) \
            == pytest.approx(1.0, abs=1e-4)

    def test_asymptote_degenerate(self):
        s = SpectrumSummary.from_groups([(1.0, 2), (0.5, 1)])
        assert tail_asymptote(10.0, s) == pytest.approx(10*math.exp(-10)*2)

class TestBounds:

    def test_chernoff(self, reference_spectrum):
        # a = (1 + 2)/2
        for u in (0.5, 1.0, 2.0):
            assert chernoff_bound(u, reference_spectrum) == pytest.approx(4*math.exp(-1.5*u))
        assert chernoff_bound(1.0, reference_spectrum, a=1.0) == pytest.approx(2*math.exp(-1))
        with pytest.raises(AnalysisError):
            chernoff_bound(1.0, reference_spectrum, a=2.0)

    def test_overlap(self, reference_spectrum):
        b = overlap_bound(15.0, 0.3, reference_spectrum)
        assert b.value == pytest.approx(2*math.exp(-1.35))
        assert b.se == 0.0
        assert overlap_bound(5.0, 0.0, reference_spectrum).value == pytest.approx(2.0)
        assert overlap_bound(5.0, 0.3, SpectrumSummary.from_groups([(1.0, 1)])).value == 0.0

    def test_overlap_decreases(self, reference_spectrum):
        values = [overlap_bound(r, 0.3, reference_spectrum).value for r in (2, 5, 10, 15, 30)]
        assert np.all(np.diff(values) < 0)

    def test_overlap_repeated_rates(self):
        s = SpectrumSummary.from_groups([(1.0, 1), (0.5, 2)])
        b = overlap_bound(10.0, 0.5, s, n_mc=200_000, seed=1)
        # tilted law: Gamma(2, 1) tail at 2.5, times Z = 4
        assert abs(b.value - 4*math.exp(-2.5)*3.5) < 4*b.se
        assert b.se > 0

    def test_rho_perp(self, reference_spectrum):
        assert rho_perp_bound(reference_spectrum) == pytest.approx(2.0)
        assert rho_perp_bound(SpectrumSummary.from_groups([(1.0, 1)])) == 0.0

    def test_sup_mean_bound(self):
        assert sup_mean_bound(0.1, 2.0, 0.25, 0.16) == pytest.approx(0.1 + 2*0.5*0.4)
        assert sup_mean_bound(0.1, 2.0, 0.25, 0.0) == pytest.approx(0.1)

class TestAmplifier:

    def test_finite(self):
        m = amplifier_moment([1.0, 0.5], 2, 0.25)
        assert not m.divergent
        assert m.value == pytest.approx(8/3, abs=1e-10)
        assert m.lambda_q == pytest.approx(0.5)

    @pytest.mark.parametrize("lam", [0.5, 0.7])
    def test_divergent(self, lam):
        m = amplifier_moment([1.0, 0.5], 2, lam)
        assert m.divergent and m.value == math.inf

    def test_volume(self, reference_spectrum):
        m = amplifier_moment(reference_spectrum, 2, 0.5, volume=2.0)
        assert m.lambda_q == pytest.approx(1.0)
        assert m.value == pytest.approx(8/3)

    def test_invalid_order(self):
        with pytest.raises(AnalysisError):
            amplifier_moment([1.0], 0, 0.1)

    def test_merged_modes_keep_their_eigenvalues(self):
        kernel = make_kernel({"family": "mercer-synthetic", "mercer_eigs": [1.0, 0.9996, 0.5]})
        decomp = decompose(kernel, build_grid(64), degeneracy_tol=5e-4)
        assert decomp.g1 == 2
        expected = 1/((1 - 0.5)*(1 - 0.5*0.9996)*(1 - 0.25))
        assert amplifier_moment(decomp, 2, 0.25).value == pytest.approx(expected, rel=1e-10)
        grouped = amplifier_moment(SpectrumSummary.from_decomposition(decomp), 2, 0.25)
        assert grouped.value == pytest.approx(1/((1 - 0.5)**2*(1 - 0.25)), rel=1e-10)

class TestReport:

    @pytest.mark.parametrize("check, value, estimate, se, rtol, verdict", [
        (Check.UPPER, 1.0, 1.2, 0.1, 0.0, True),
        (Check.UPPER, 1.0, 1.4, 0.1, 0.0, False),
        (Check.LOWER, 1.0, 0.75, 0.1, 0.0, True),
        (Check.LOWER, 1.0, 0.6, 0.1, 0.0, False),
        (Check.MATCH, 1.0, 1.01, 0.0, 0.02, True),
        (Check.MATCH, 1.0, 0.9, 0.01, 0.02, False),
        (Check.RATIO, 2.0, 2.1, 0.0, 0.06, True),
        (Check.RATIO, 2.0, 2.2, 0.0, 0.06, False),
        (Check.UPPER, 1.0, float("nan"), 0.0, 0.0, False),
    ])
    def test_verdicts(self, check, value, estimate, se, rtol, verdict):
        row = ReportRow("f", "rel", value, estimate, se, check=check, rtol=rtol)
        assert row.verdict is verdict

    def test_custom_slack(self):
        assert not ReportRow("f", "rel", 1.0, 1.25, 0.1, nse=2.0).verdict

    def test_outputs(self, tmp_path):
        report = AnalysisReport([
            ReportRow("a", "x <= 1", 1.0, 0.5, 0.1, r=2.0),
            ReportRow("b", "x >= 1", 1.0, 0.5, 0.1, check=Check.LOWER),
        ])
        assert not report.passed and report.n_failed == 1
        doc = json.loads(report.to_json(tmp_path/"r.json"))
        assert doc["n_failed"] == 1
        assert doc["rows"][1]["check"] == "lower"
        text = report.to_text(tmp_path/"r.txt")
        assert "PASS" in text and "FAIL" in text
        assert "1/2 checks passed" in text
        assert (tmp_path/"r.txt").read_text() == text
        assert list(report.to_frame().columns) == AnalysisReport.COLUMNS

def _summary(r_values, p_overlap):
    n = len(r_values)
    col = eps_column(ConcentrationColumns.P_OVERLAP, 0.3)
    return pd.DataFrame({
        SummaryColumns.R.value: r_values,
        col: p_overlap, se(col): [0.01]*n,
        SummaryColumns.E_SUP_PERP.value: [0.3]*n, se(SummaryColumns.E_SUP_PERP): [0.01]*n,
        SummaryColumns.E_PSI_PERP_RATIO.value: [0.2]*n,
        SummaryColumns.P_SUP_EPS.value: [0.5]*n,
        SummaryColumns.P_EVENT.value: [0.1]*n, se(SummaryColumns.P_EVENT): [0.001]*n,
    })

class TestConcentrationTable:

    def test_table_and_files(self, reference_spectrum, tmp_path):
        summary = _summary([5.0, 10.0], [0.4, 0.3])
        table = emit_concentration_table(
            summary, reference_spectrum, 1.3, [0.3], 0.1, tmp_path/"conc"
        )
        bound = table[eps_column(ConcentrationColumns.OVERLAP_BOUND, 0.3)]
        assert_allclose(bound, [2*math.exp(-0.45), 2*math.exp(-0.9)])
        assert np.all(bound >= table[eps_column(ConcentrationColumns.P_OVERLAP, 0.3)])
        assert_allclose(table[ConcentrationColumns.SUP_MEAN_BOUND.value],
                        0.1 + 1.3*math.sqrt(0.2)*math.sqrt(0.5))
        lines = (tmp_path/"conc.dat").read_text().splitlines()
        assert lines[0].startswith("# r ")
        assert len(lines) == 3
        assert (tmp_path/"conc.csv").exists()

    def test_needs_two_rows(self, reference_spectrum):
        with pytest.raises(AnalysisError):
            emit_concentration_table(_summary([5.0], [0.4]), reference_spectrum, 1.3, [0.3], 0.1)

def test_condensation_curves(reference, reference_spectrum):
    ensembles = [
        sample_conditional_decomposition(reference, r, 3000, seed=i)
        for i, r in enumerate((5.0, 10.0))
    ]
    curves = condensation_curves(ensembles, reference_spectrum)
    assert list(curves["r"]) == [5.0, 10.0]
    assert curves["par_flag"].all()
    assert curves["perp_flag"].all()
    assert curves["sum_flag"].all()
    assert_allclose(curves["rho_perp_bound"], 2.0)
