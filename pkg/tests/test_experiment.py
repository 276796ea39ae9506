import json
from pathlib import Path

import pandas as pd
import pytest

from pygfc.cli import EXIT_CONFIG, EXIT_OK, main
from pygfc.conditioning import BudgetExhausted
from pygfc.experiment import (
    ConfigError, aggregate_report, config_from_dict, ensemble_file, load_config,
    run_experiment
)
from pygfc.experiment.rows import PSI_MEAN_RATIO, PSI_P, PSI_R, PSI_T, psi_rows
from pygfc.io import SummaryColumns, se

CONFIGS = Path(__file__).parent.parent/"configs"

def small(out: Path, **changes) -> dict:
    doc = {
        "kernel": {"family": "mercer-synthetic", "mercer_eigs": [1.0, 0.5]},
        "grid_size": 32,
        "r_values": [5.0, 10.0],
        "eps_values": [0.3],
        "samples_per_point": 1000,
        "overlap_mc_samples": 1000,
        "seed": 11,
        "output_dir": str(out),
    }
    doc.update(changes)
    return doc

class TestConfig:

    def test_demo_files_agree(self):
        a = load_config(CONFIGS/"demo.json")
        b = load_config(CONFIGS/"demo.toml")
        assert a == b
        assert a.digest() == b.digest()
        assert a.r_values == [2.0, 5.0, 10.0, 15.0]

    def test_override(self, tmp_path):
        cfg = config_from_dict(small(tmp_path))
        assert cfg.override(output_dir="elsewhere", njobs=4).digest() == cfg.digest()
        assert cfg.override(seed=12).digest() != cfg.digest()
        assert cfg.override(seed=None) is cfg

    def test_manifest_is_a_config(self, tmp_path):
        cfg = config_from_dict(small(tmp_path))
        assert config_from_dict({"config": cfg.as_dict(), "files": {}}) == cfg

    def test_integral_counts(self, tmp_path):
        cfg = config_from_dict(small(tmp_path, samples_per_point=1e4))
        assert cfg.samples_per_point == 10_000

    @pytest.mark.parametrize("changes, field", [
        ({"kernel": {"family": "matern"}}, "kernel.family"),
        ({"kernel": {"family": "exponential", "ell": -1}}, "kernel.ell"),
        ({"colour": "blue"}, "colour"),
        ({"r_values": [5.0, 2.0]}, "r_values"),
        ({"r_values": []}, "r_values"),
        ({"samples_per_point": 10}, "samples_per_point"),
        ({"seed": 1.5}, "seed"),
        ({"method": "mcmc"}, "method"),
        ({"degeneracy_tol": 0.01}, "degeneracy_tol"),
    ])
    def test_invalid(self, tmp_path, changes, field):
        with pytest.raises(ConfigError) as info:
            config_from_dict(small(tmp_path, **changes))
        assert info.value.field == field

    def test_seed_is_required(self, tmp_path):
        doc = small(tmp_path)
        del doc["seed"]
        with pytest.raises(ConfigError) as info:
            config_from_dict(doc)
        assert info.value.field == "seed"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError) as info:
            load_config(tmp_path/"none.toml")
        assert info.value.field == "config"

    def test_unparsable(self, tmp_path):
        path = tmp_path/"bad.toml"
        path.write_text("seed = = 3\n")
        with pytest.raises(ConfigError):
            load_config(path)

class TestRun:

    @pytest.fixture(scope="class")
    def runs(self, tmp_path_factory):
        base = tmp_path_factory.mktemp("runs")
        first = run_experiment(config_from_dict(small(base/"a")))
        second = run_experiment(config_from_dict(small(base/"b")))
        return first, second

    def test_files(self, runs):
        result, _ = runs
        names = {p.name for p in result.files}
        for name in ("spectrum.json", ensemble_file(5.0), ensemble_file(10.0),
                     "ensemble_summary.csv", "psi_summary.csv", "condensation.csv",
                     "concentration.csv", "concentration.dat", "analysis.json", "analysis.txt", "manifest.json"):
            assert name in names
            assert (result.output_dir/name).is_file()
        assert len(result.summary) == 2
        assert list(result.summary[SummaryColumns.METHOD.value]) == ["rejection", "decomposition"]

    def test_all_checks_pass(self, runs):
        result, _ = runs
        failed = [(row.formula, row.r) for row in result.report.rows if not row.verdict]
        assert result.passed, failed
        exact = [row for row in result.report.rows if row.formula == "exact_tail"]
        assert [row.r for row in exact] == [5.0, 10.0]
        trend = [row for row in result.report.rows if row.formula == "psi_mean_tail"]
        assert len(trend) == 1

    def test_condensation_file(self, runs):
        result, _ = runs
        curves = pd.read_csv(result.output_dir/"condensation.csv")
        assert list(curves["r"]) == [5.0, 10.0]
        assert curves["par_flag"].all()

    def test_manifest(self, runs):
        result, _ = runs
        manifest = json.loads((result.output_dir/"manifest.json").read_text())
        assert manifest["config_sha256"] == config_from_dict(manifest).digest()
        assert set(manifest["files"]) == {p.name for p in result.files[:-1]}
        assert "numpy" in manifest["versions"]

    def test_reproducible(self, runs):
        a, b = runs
        for path in a.files:
            if path.name == "manifest.json":
                continue
            assert path.read_bytes() == (b.output_dir/path.name).read_bytes(), path.name
        files_a = json.loads((a.output_dir/"manifest.json").read_text())["files"]
        files_b = json.loads((b.output_dir/"manifest.json").read_text())["files"]
        assert files_a == files_b

    def test_aggregate_report(self, runs, tmp_path):
        result, _ = runs
        report = aggregate_report(result.output_dir, tmp_path)
        # the unconditional rows are not rebuilt
        assert len(report.rows) == len(result.report.rows) - 5
        assert (tmp_path/"report.json").is_file()
        assert (tmp_path/"report_concentration.dat").is_file()
        rebuilt = pd.read_csv(tmp_path/"report_concentration.csv")
        assert len(rebuilt) == 2

def test_failed_run_removes_outputs(tmp_path):
    out = tmp_path/"fail"
    cfg = config_from_dict(small(
        out, r_values=[50.0], method="rejection", rejection_budget=10_000
    ))
    with pytest.raises(BudgetExhausted):
        run_experiment(cfg)
    assert not out.exists()

class TestCli:

    @pytest.fixture
    def config_file(self, tmp_path):
        path = tmp_path/"small.json"
        path.write_text(json.dumps(small(tmp_path/"out")))
        return path

    def test_bad_config(self, tmp_path):
        path = tmp_path/"bad.json"
        path.write_text(json.dumps(small(tmp_path, colour="blue")))
        assert main(["spectrum", "--config", str(path)]) == EXIT_CONFIG
        assert main(["spectrum", "--config", str(tmp_path/"none.json")]) == EXIT_CONFIG

    def test_spectrum(self, config_file, tmp_path):
        assert main(["spectrum", "--config", str(config_file)]) == EXIT_OK
        doc = json.loads((tmp_path/"out"/"spectrum.json").read_text())
        assert doc["n_modes"] == 2
        assert len(doc["groups"]) == 2

    def test_sample(self, config_file, tmp_path):
        out = tmp_path/"samples"
        assert main(["sample", "--config", str(config_file), "--n", "500",
                     "--out", str(out)]) == EXIT_OK
        assert len(pd.read_csv(out/"samples.csv")) == 500

    def test_condition(self, config_file, tmp_path):
        assert main(["condition", "--config", str(config_file), "--r", "5"]) == EXIT_OK
        out = tmp_path/"out"
        assert len(pd.read_csv(out/ensemble_file(5.0))) == 1000
        row = json.loads((out/"summary_r5.json").read_text())
        assert row[SummaryColumns.R.value] == 5.0

    def test_run_and_report(self, config_file, tmp_path):
        assert main(["run", "--config", str(config_file)]) == EXIT_OK
        assert main(["report", "--from", str(tmp_path/"out"),
                     "--out", str(tmp_path/"report")]) == EXIT_OK
        assert (tmp_path/"report"/"report.txt").is_file()

def test_psi_mean_tail_trend(reference_spectrum):
    r = [2.0, 5.0, 8.0]
    summary = pd.DataFrame({
        SummaryColumns.R.value: r,
        SummaryColumns.P_EVENT.value: [0.3, 0.01, 7e-4],
        se(SummaryColumns.P_EVENT): [0.01, 1e-3, 1e-5],
    })
    psi_summary = pd.DataFrame({
        PSI_R: r, PSI_T: r,
        PSI_P: [0.4, 0.02, 1e-3], se(PSI_P): [0.01, 1e-3, 1e-5],
        PSI_MEAN_RATIO: [1.5, 1.2, 1.3], se(PSI_MEAN_RATIO): [0.01]*3,
    })
    rows = psi_rows(summary, psi_summary, reference_spectrum)
    assert [row.formula for row in rows] == ["psi_mean_tail"]*2
    assert [row.verdict for row in rows] == [True, False]
    assert [row.r for row in rows] == [5.0, 8.0]
