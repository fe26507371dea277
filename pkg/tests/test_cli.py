import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from logergodic import validation
from logergodic.cli import main
from logergodic.validation import CriterionResult


@pytest.fixture
def runner():
    return CliRunner()


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestSimulate:
    def test_minimal_run_writes_path_and_header(self, runner, tmp_path):
        out = tmp_path / "run"
        result = runner.invoke(main, ["--out", str(out), "simulate", "--dt", "0.01"])
        assert result.exit_code == 0, result.output
        assert (out / "path_0000.csv").exists()
        assert (out / "paths_header.json").exists()
        assert (out / "manifest.json").exists()
        rows = read_csv(out / "path_0000.csv")
        assert list(rows[0]) == ["t", "value"]
        assert len(rows) == 101

    def test_rerun_is_byte_identical(self, runner, tmp_path):
        args = ["--seed", "5", "simulate", "--dt", "0.01", "--n-paths", "2"]
        for d in ("a", "b"):
            result = runner.invoke(main, ["--out", str(tmp_path / d)] + args)
            assert result.exit_code == 0, result.output
        for name in ("path_0000.csv", "path_0001.csv", "paths_header.json", "manifest.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_wide_format(self, runner, tmp_path):
        out = tmp_path / "wide"
        result = runner.invoke(
            main, ["--out", str(out), "simulate", "--dt", "0.01", "--n-paths", "3", "--wide"]
        )
        assert result.exit_code == 0, result.output
        rows = read_csv(out / "paths_wide.csv")
        assert list(rows[0]) == ["t", "path_0", "path_1", "path_2"]

    def test_config_file_with_flag_override(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"simulate": {"n_paths": 2, "dt": 0.01}}))
        out1 = tmp_path / "from_config"
        result = runner.invoke(main, ["--config", str(cfg), "--out", str(out1), "simulate"])
        assert result.exit_code == 0, result.output
        assert (out1 / "path_0001.csv").exists()
        out2 = tmp_path / "flag_wins"
        result = runner.invoke(
            main, ["--config", str(cfg), "--out", str(out2), "simulate", "--n-paths", "1"]
        )
        assert result.exit_code == 0, result.output
        assert (out2 / "path_0000.csv").exists()
        assert not (out2 / "path_0001.csv").exists()

    def test_manifest_echoes_resolved_config(self, runner, tmp_path):
        out = tmp_path / "m"
        result = runner.invoke(
            main, ["--seed", "9", "--out", str(out), "simulate", "--dt", "0.01"]
        )
        assert result.exit_code == 0, result.output
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "simulate"
        assert manifest["config"]["seed"] == 9
        assert manifest["config"]["dt"] == 0.01
        assert "path_0000.csv" in manifest["outputs"]

    def test_bad_param_is_usage_error(self, runner, tmp_path):
        result = runner.invoke(
            main, ["--out", str(tmp_path / "x"), "simulate", "--sigma", "-1"]
        )
        assert result.exit_code == 2

    def test_bad_config_file_is_usage_error(self, runner, tmp_path):
        cfg = tmp_path / "broken.json"
        cfg.write_text("{not json")
        result = runner.invoke(main, ["--config", str(cfg), "simulate"])
        assert result.exit_code == 2


class TestTrade:
    def test_internal_simulation_outputs(self, runner, tmp_path):
        out = tmp_path / "trade"
        result = runner.invoke(main, ["--seed", "2", "--out", str(out), "trade", "--dt", "0.001"])
        assert result.exit_code == 0, result.output
        for name in (
            "signals.csv",
            "bound_report.csv",
            "summary.json",
            "fig1_price.csv",
            "fig2_zprocess.csv",
            "manifest.json",
        ):
            assert (out / name).exists(), name
        summary = json.loads((out / "summary.json").read_text())
        assert summary["n_excursions"] >= 1
        assert summary["profit"] >= 0.0
        assert summary["all_contained"] is True

    def test_fig2_marks_recurrences_at_the_level(self, runner, tmp_path):
        out = tmp_path / "fig2"
        result = runner.invoke(main, ["--seed", "2", "--out", str(out), "trade", "--dt", "0.001"])
        assert result.exit_code == 0, result.output
        rows = read_csv(out / "fig2_zprocess.csv")
        assert list(rows[0]) == ["t", "z", "recurrence"]
        markers = [r for r in rows if r["recurrence"] == "1"]
        assert markers
        assert all(float(r["z"]) == 0.0 for r in markers)
        z_vals = np.array([float(r["z"]) for r in rows if r["recurrence"] == "0"])
        assert z_vals.min() < 0 < z_vals.max()  # Z oscillates about the level

    def test_constant_price_input_yields_zero_profit(self, runner, tmp_path):
        price_csv = tmp_path / "flat.csv"
        with open(price_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "value"])
            for k in range(101):
                writer.writerow([repr(k * 0.01), repr(100.0)])
        out = tmp_path / "flat_out"
        result = runner.invoke(
            main, ["--out", str(out), "trade", "--input", str(price_csv)]
        )
        assert result.exit_code == 0, result.output
        summary = json.loads((out / "summary.json").read_text())
        assert summary["n_excursions"] == 0
        assert summary["profit"] == 0.0

    def test_signal_snapshot_is_stable(self, runner, tmp_path):
        outs = []
        for d in ("s1", "s2"):
            out = tmp_path / d
            result = runner.invoke(
                main, ["--seed", "3", "--out", str(out), "trade", "--dt", "0.001"]
            )
            assert result.exit_code == 0, result.output
            outs.append((out / "signals.csv").read_bytes())
        assert outs[0] == outs[1]


class TestRotate:
    def test_diagnostics_and_figure_data(self, runner, tmp_path):
        out = tmp_path / "rot"
        result = runner.invoke(
            main,
            [
                "--out", str(out), "rotate", "--theta", "sqrt2", "--n", "100000",
                "--intervals", "0.2:0.5", "--arcs", "0.25",
            ],
        )
        assert result.exit_code == 0, result.output
        freq = read_csv(out / "equidistribution.csv")
        assert len(freq) == 1
        assert abs(float(freq[0]["frequency"]) - 0.3) <= 0.01
        kac = read_csv(out / "kac_returns.csv")
        assert float(kac[0]["mean_return"]) == pytest.approx(4.0, rel=0.02)
        birkhoff = read_csv(out / "birkhoff.csv")
        consts = {r["function"]: float(r["average"]) for r in birkhoff}
        assert consts["constant_0.37"] == pytest.approx(0.37, abs=1e-12)
        fig3 = read_csv(out / "fig3_circle.csv")
        assert list(fig3[0]) == ["t", "price", "theta", "circle_x", "circle_y"]
        x = float(fig3[10]["circle_x"])
        y = float(fig3[10]["circle_y"])
        assert x**2 + y**2 == pytest.approx(1.0, abs=1e-12)

    def test_numeric_theta_accepted(self, runner, tmp_path):
        out = tmp_path / "num"
        result = runner.invoke(
            main,
            ["--out", str(out), "rotate", "--theta", "0.4142", "--n", "1000",
             "--intervals", "0.0:0.5", "--arcs", "0.5"],
        )
        assert result.exit_code == 0, result.output

    def test_unknown_theta_is_usage_error(self, runner, tmp_path):
        result = runner.invoke(
            main, ["--out", str(tmp_path / "x"), "rotate", "--theta", "pi-ish"]
        )
        assert result.exit_code == 2


class TestPrice:
    def test_default_sweep_cross_validates(self, runner, tmp_path):
        out = tmp_path / "sweep"
        result = runner.invoke(main, ["--out", str(out), "price"])
        assert result.exit_code == 0, result.output
        rows = read_csv(out / "pricing_sweep.csv")
        assert len(rows) == 27
        for row in rows:
            assert row["error"] == ""
            assert float(row["rel_gap"]) <= 1e-2
            assert row["rotation"] != ""

    def test_domain_error_rows_are_reported_not_fatal(self, runner, tmp_path):
        out = tmp_path / "err"
        result = runner.invoke(main, ["--out", str(out), "price", "--k", "0.5"])
        assert result.exit_code == 0, result.output
        rows = read_csv(out / "pricing_sweep.csv")
        assert all("K > 1" in row["error"] for row in rows)
        assert all(row["closed_form"] == "" for row in rows)

    def test_single_point_sweep(self, runner, tmp_path):
        out = tmp_path / "single"
        result = runner.invoke(
            main,
            ["--out", str(out), "price", "--taus", "0.5", "--zs", "0.05", "--xs", "100"],
        )
        assert result.exit_code == 0, result.output
        rows = read_csv(out / "pricing_sweep.csv")
        assert len(rows) == 1
        assert float(rows[0]["closed_form"]) == pytest.approx(-2.846658565115171, rel=1e-9)

    def test_json_format(self, runner, tmp_path):
        out = tmp_path / "json"
        result = runner.invoke(
            main,
            ["--out", str(out), "--format", "json", "price",
             "--taus", "0.5", "--zs", "0.05", "--xs", "100"],
        )
        assert result.exit_code == 0, result.output
        rows = json.loads((out / "pricing_sweep.json").read_text())
        assert len(rows) == 1

    def test_bad_grid_is_usage_error(self, runner, tmp_path):
        result = runner.invoke(
            main, ["--out", str(tmp_path / "x"), "price", "--taus", "0.5,abc"]
        )
        assert result.exit_code == 2


class TestValidate:
    def test_failure_exits_nonzero(self, runner, monkeypatch):
        def fake_run_all():
            return [
                CriterionResult(cid=1, description="stub", passed=True, detail="ok"),
                CriterionResult(cid=2, description="stub", passed=False, detail="bad"),
            ]

        monkeypatch.setattr(validation, "run_all", fake_run_all)
        result = runner.invoke(main, ["validate"])
        assert result.exit_code == 1
        assert "[FAIL]" in result.output
        assert "1/2 criteria passed" in result.output

    def test_report_lists_every_criterion(self, runner, monkeypatch):
        def fake_run_all():
            return [
                CriterionResult(cid=i, description=f"c{i}", passed=True, detail="ok")
                for i in range(1, 13)
            ]

        monkeypatch.setattr(validation, "run_all", fake_run_all)
        result = runner.invoke(main, ["validate"])
        assert result.exit_code == 0
        for i in range(1, 13):
            assert f"[PASS] {i:2d}" in result.output

    def test_bad_format_flag_is_usage_error(self, runner):
        result = runner.invoke(main, ["--format", "xml", "validate"])
        assert result.exit_code == 2
