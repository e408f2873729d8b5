"""End-to-end checks of the command line: exit codes, CSV and SVG artifacts,
manifest completeness, and byte-level determinism."""

import csv
import json
import math
import os
import xml.etree.ElementTree as ET

import pytest

from fuzzcurve import cli
from fuzzcurve.geometry import QuadratureError

from fixtures import (
    CURVED_ALPHA_MEAN,
    CURVED_CURVE_LENGTH,
    CURVED_D,
    CURVED_OVERALL_SKEWNESS,
    CURVED_SIGN_CHANGE,
    CURVED_U,
)

REFERENCE_ANGLE = math.acos(2.0 / math.sqrt(5.0)) - math.pi / 4.0


def base_config():
    return {
        "fuzzy_numbers": {
            "worked": {"kind": "triangle", "l": 2, "m": 4, "r": 5},
            "point": {"kind": "triangle", "l": 4, "m": 4, "r": 4},
            "curved": {"kind": "analytic", "d": CURVED_D, "u": CURVED_U},
            "experts": {
                "kind": "panel",
                "estimates": [
                    {"source": "a", "lower": 2, "upper": 6},
                    {"source": "b", "lower": 3, "upper": 7},
                    {"source": "c", "lower": 4, "upper": 6},
                ],
            },
        },
        "portfolio": {
            "variant": "min-variance",
            "mu": [0.1, 0.2],
            "cov": [[0.01, 0.0], [0.0, 0.01]],
            "skew": [0.0, 0.0],
            "mu_base": 0.0,
            "var_cap": 1.0,
            "skew_base": -1.0,
        },
    }


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


def run(argv):
    return cli.main(argv)


class TestConfigErrors:
    def test_missing_file(self, tmp_path):
        assert run(["analyze", "--config", str(tmp_path / "nope.json"), "--name", "x"]) == 2

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert run(["analyze", "--config", str(path), "--name", "x"]) == 2

    def test_duplicate_keys(self, tmp_path, capsys):
        path = tmp_path / "dup.json"
        path.write_text('{"fuzzy_numbers": {"a": 1, "a": 2}}')
        assert run(["analyze", "--config", str(path), "--name", "a"]) == 2
        assert "duplicate" in capsys.readouterr().err

    def test_unknown_name(self, tmp_path, capsys):
        cfg = write_config(tmp_path, base_config())
        assert run(["analyze", "--config", cfg, "--name", "ghost"]) == 2
        assert "ghost" in capsys.readouterr().err

    def test_unknown_kind(self, tmp_path):
        doc = base_config()
        doc["fuzzy_numbers"]["odd"] = {"kind": "gaussian"}
        cfg = write_config(tmp_path, doc)
        assert run(["analyze", "--config", cfg, "--name", "odd"]) == 2

    def test_inverted_triangle(self, tmp_path):
        doc = base_config()
        doc["fuzzy_numbers"]["bad"] = {"kind": "triangle", "l": 5, "m": 4, "r": 6}
        cfg = write_config(tmp_path, doc)
        assert run(["analyze", "--config", cfg, "--name", "bad"]) == 2

    def test_bad_expression(self, tmp_path):
        doc = base_config()
        doc["fuzzy_numbers"]["bad"] = {"kind": "analytic", "d": "alpha +", "u": "3"}
        cfg = write_config(tmp_path, doc)
        assert run(["analyze", "--config", cfg, "--name", "bad"]) == 2

    def test_unusable_name(self, tmp_path):
        doc = base_config()
        doc["fuzzy_numbers"]["a/b"] = {"kind": "triangle", "l": 0, "m": 1, "r": 2}
        cfg = write_config(tmp_path, doc)
        assert run(["analyze", "--config", cfg, "--name", "a/b"]) == 2

    def test_bad_grid(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        argv = ["analyze", "--config", cfg, "--name", "worked", "--grid", "1"]
        assert run(argv) == 2

    def test_missing_portfolio_block(self, tmp_path):
        cfg = write_config(tmp_path, {"fuzzy_numbers": {}})
        assert run(["portfolio", "--config", cfg]) == 2

    def test_asymmetric_cov_entries(self, tmp_path):
        doc = base_config()
        doc["portfolio"]["cov"] = [[0.01, 0.002], [0.003, 0.01]]
        cfg = write_config(tmp_path, doc)
        assert run(["portfolio", "--config", cfg]) == 2

    def test_bad_alpha_flag(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        assert run(["portfolio", "--config", cfg, "--alphas", "a,b"]) == 2
        assert run(["portfolio", "--config", cfg, "--alphas", "0,1.5"]) == 2


class TestAnalyze:
    def test_worked_triangle_report(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        out = str(tmp_path / "out")
        argv = ["analyze", "--config", cfg, "--name", "worked", "--grid", "64", "--out", out]
        assert run(argv) == 0
        (row,) = read_rows(os.path.join(out, "worked_report.csv"))
        assert float(row["curve_length"]) == pytest.approx(math.sqrt(5.0), abs=1e-10)
        assert float(row["overall_skewness_rad"]) == pytest.approx(REFERENCE_ANGLE, abs=1e-10)
        assert float(row["overall_skewness_pi"]) == pytest.approx(
            REFERENCE_ANGLE / math.pi, abs=1e-10
        )
        assert row["sign_changes"] == ""
        assert float(row["alpha_mean"]) == 0.0
        assert float(row["mean_l"]) == pytest.approx(2.0, abs=1e-9)
        assert float(row["mean_m"]) == pytest.approx(4.0, abs=1e-9)
        assert float(row["mean_r"]) == pytest.approx(5.0, abs=1e-9)
        assert float(row["overall_dispersion"]) == pytest.approx(0.0, abs=1e-9)
        assert row["degenerate"] == "false"

    def test_crisp_report_is_all_zero_and_flagged(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        out = str(tmp_path / "out")
        argv = ["analyze", "--config", cfg, "--name", "point", "--grid", "16", "--out", out]
        assert run(argv) == 0
        (row,) = read_rows(os.path.join(out, "point_report.csv"))
        for key in ("curve_length", "overall_skewness_rad", "alpha_mean", "overall_dispersion"):
            assert float(row[key]) == 0.0
        assert row["degenerate"] == "true"
        assert float(row["mean_m"]) == 4.0

    def test_curved_report_values(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        out = str(tmp_path / "out")
        argv = ["analyze", "--config", cfg, "--name", "curved", "--grid", "256", "--out", out]
        assert run(argv) == 0
        (row,) = read_rows(os.path.join(out, "curved_report.csv"))
        assert float(row["curve_length"]) == pytest.approx(CURVED_CURVE_LENGTH, abs=1e-6)
        assert float(row["overall_skewness_rad"]) == pytest.approx(
            CURVED_OVERALL_SKEWNESS, abs=1e-6
        )
        assert float(row["sign_changes"]) == pytest.approx(CURVED_SIGN_CHANGE, abs=1e-8)
        assert float(row["alpha_mean"]) == pytest.approx(CURVED_ALPHA_MEAN, abs=1e-8)

    def test_profiles_shape_and_columns(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        out = str(tmp_path / "out")
        argv = ["analyze", "--config", cfg, "--name", "worked", "--grid", "64", "--out", out]
        assert run(argv) == 0
        rows = read_rows(os.path.join(out, "worked_profiles.csv"))
        assert len(rows) == 65
        assert list(rows[0]) == [
            "alpha", "d", "u", "d_prime", "u_prime", "r", "gamma", "level_dispersion",
        ]
        assert float(rows[0]["alpha"]) == 0.0
        assert float(rows[-1]["alpha"]) == 1.0
        assert float(rows[0]["d"]) == 2.0
        assert float(rows[0]["u"]) == 5.0
        assert float(rows[32]["gamma"]) == pytest.approx(REFERENCE_ANGLE, abs=1e-12)

    def test_manifest_lists_every_file_exactly_once(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        out = str(tmp_path / "out")
        argv = ["analyze", "--config", cfg, "--name", "worked", "--grid", "32", "--out", out]
        assert run(argv) == 0
        with open(os.path.join(out, "run_manifest.json")) as handle:
            manifest = json.load(handle)
        assert sorted(manifest["artifacts"]) == sorted(os.listdir(out))
        assert len(set(manifest["artifacts"])) == len(manifest["artifacts"])
        assert manifest["config_digest"].startswith("sha256:")
        assert manifest["tool_version"]
        assert all(t >= 0.0 for t in manifest["stages"].values())

    def test_svgs_are_well_formed_xml(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        out = str(tmp_path / "out")
        argv = ["analyze", "--config", cfg, "--name", "worked", "--grid", "32", "--out", out]
        assert run(argv) == 0
        svgs = [f for f in os.listdir(out) if f.endswith(".svg")]
        assert len(svgs) == 4
        for svg in svgs:
            root = ET.parse(os.path.join(out, svg)).getroot()
            assert root.tag.endswith("svg")

    def test_runs_are_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        out_a = str(tmp_path / "a")
        out_b = str(tmp_path / "b")
        for out in (out_a, out_b):
            argv = ["analyze", "--config", cfg, "--name", "curved", "--grid", "64", "--out", out]
            assert run(argv) == 0
        for csv_name in ("curved_report.csv", "curved_profiles.csv"):
            with open(os.path.join(out_a, csv_name), "rb") as fa:
                with open(os.path.join(out_b, csv_name), "rb") as fb:
                    assert fa.read() == fb.read()

    def test_env_var_sets_output_dir(self, tmp_path, monkeypatch):
        cfg = write_config(tmp_path, base_config())
        env_dir = str(tmp_path / "from_env")
        monkeypatch.setenv("FUZZCURVE_OUT", env_dir)
        assert run(["analyze", "--config", cfg, "--name", "worked", "--grid", "16"]) == 0
        assert os.path.exists(os.path.join(env_dir, "worked_report.csv"))

    def test_out_flag_beats_env_var(self, tmp_path, monkeypatch):
        cfg = write_config(tmp_path, base_config())
        monkeypatch.setenv("FUZZCURVE_OUT", str(tmp_path / "ignored"))
        out = str(tmp_path / "explicit")
        argv = ["analyze", "--config", cfg, "--name", "worked", "--grid", "16", "--out", out]
        assert run(argv) == 0
        assert os.path.exists(os.path.join(out, "worked_report.csv"))
        assert not os.path.exists(str(tmp_path / "ignored"))

    def test_numeric_failure_exit_code(self, tmp_path, monkeypatch, capsys):
        def boom(fn, grid_n):
            raise QuadratureError(1.0, 1.0)

        monkeypatch.setattr(cli, "analyze_skewness", boom)
        cfg = write_config(tmp_path, base_config())
        argv = ["analyze", "--config", cfg, "--name", "worked", "--out", str(tmp_path / "o")]
        assert run(argv) == 3
        assert "analyze" in capsys.readouterr().err

    def test_io_failure_exit_code(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        blocker = tmp_path / "blocker"
        blocker.write_text("file, not a directory")
        out = str(blocker / "sub")
        assert run(["analyze", "--config", cfg, "--name", "worked", "--out", out]) == 4


class TestAggregate:
    def test_worked_panel_levels(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        out = str(tmp_path / "out")
        assert run(["aggregate", "--config", cfg, "--panel", "experts", "--out", out]) == 0
        rows = read_rows(os.path.join(out, "experts_levels.csv"))
        got = [(float(r["membership"]), float(r["lower"]), float(r["upper"])) for r in rows]
        want = [(1 / 3, 2.0, 7.0), (2 / 3, 3.0, 6.0), (1.0, 4.0, 6.0)]
        for (gm, gl, gu), (wm, wl, wu) in zip(got, want):
            assert gm == pytest.approx(wm, abs=1e-9)
            assert gl == wl and gu == wu
        assert len(got) == 3

    def test_worked_panel_knots(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        out = str(tmp_path / "out")
        assert run(["aggregate", "--config", cfg, "--panel", "experts", "--out", out]) == 0
        rows = read_rows(os.path.join(out, "experts_knots.csv"))
        d_vals = [float(r["value"]) for r in rows if r["side"] == "d"]
        u_vals = [float(r["value"]) for r in rows if r["side"] == "u"]
        assert d_vals == [2.0, 2.0, 3.0, 5.0]
        assert u_vals == [7.0, 7.0, 6.0, 5.0]

    def test_staircase_svg_and_manifest(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        out = str(tmp_path / "out")
        assert run(["aggregate", "--config", cfg, "--panel", "experts", "--out", out]) == 0
        ET.parse(os.path.join(out, "experts_staircase.svg"))
        with open(os.path.join(out, "run_manifest.json")) as handle:
            manifest = json.load(handle)
        assert sorted(manifest["artifacts"]) == sorted(os.listdir(out))

    def test_disjoint_panel_exits_5_and_names_pair(self, tmp_path, capsys):
        doc = base_config()
        doc["fuzzy_numbers"]["split"] = {
            "kind": "panel",
            "estimates": [
                {"source": "low", "lower": 0, "upper": 1},
                {"source": "high", "lower": 2, "upper": 3},
            ],
        }
        cfg = write_config(tmp_path, doc)
        out = str(tmp_path / "out")
        assert run(["aggregate", "--config", cfg, "--panel", "split", "--out", out]) == 5
        err = capsys.readouterr().err
        assert "low" in err and "high" in err

    def test_non_panel_entry_rejected(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        argv = ["aggregate", "--config", cfg, "--panel", "worked", "--out", str(tmp_path / "o")]
        assert run(argv) == 2

    def test_pair_estimates_accepted(self, tmp_path):
        doc = base_config()
        doc["fuzzy_numbers"]["pairs"] = {"kind": "panel", "estimates": [[2, 6], [3, 7]]}
        cfg = write_config(tmp_path, doc)
        out = str(tmp_path / "out")
        assert run(["aggregate", "--config", cfg, "--panel", "pairs", "--out", out]) == 0
        rows = read_rows(os.path.join(out, "pairs_levels.csv"))
        assert len(rows) == 2


class TestPortfolio:
    def test_crisp_levels_csv(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        out = str(tmp_path / "out")
        argv = ["portfolio", "--config", cfg, "--alphas", "0,0.5,1", "--out", out]
        assert run(argv) == 0
        rows = read_rows(os.path.join(out, "portfolio_levels.csv"))
        assert len(rows) == 6
        assert list(rows[0]) == ["alpha", "endpoint", "w1", "w2", "objective", "feasible", "note"]
        for row in rows:
            assert row["feasible"] == "true"
            assert float(row["w1"]) + float(row["w2"]) == pytest.approx(1.0, abs=1e-9)
            assert float(row["objective"]) == pytest.approx(0.0025, abs=1e-6)
        by_alpha = {}
        for row in rows:
            by_alpha.setdefault(row["alpha"], []).append(row["objective"])
        for pair in by_alpha.values():
            assert pair[0] == pair[1]

    def test_named_reference_parameters(self, tmp_path):
        doc = base_config()
        doc["fuzzy_numbers"]["ret"] = {"kind": "triangle", "l": 0.05, "m": 0.1, "r": 0.2}
        doc["portfolio"]["mu"] = ["ret", 0.2]
        cfg = write_config(tmp_path, doc)
        out = str(tmp_path / "out")
        assert run(["portfolio", "--config", cfg, "--alphas", "0,1", "--out", out]) == 0
        rows = read_rows(os.path.join(out, "portfolio_levels.csv"))
        assert len(rows) == 4

    def test_interval_svg_and_manifest(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        out = str(tmp_path / "out")
        assert run(["portfolio", "--config", cfg, "--alphas", "0,1", "--out", out]) == 0
        ET.parse(os.path.join(out, "portfolio_intervals.svg"))
        with open(os.path.join(out, "run_manifest.json")) as handle:
            manifest = json.load(handle)
        assert sorted(manifest["artifacts"]) == sorted(os.listdir(out))

    def test_infeasible_level_recorded_exit_zero(self, tmp_path):
        doc = base_config()
        doc["portfolio"]["mu_base"] = 0.5
        cfg = write_config(tmp_path, doc)
        out = str(tmp_path / "out")
        assert run(["portfolio", "--config", cfg, "--alphas", "0.5", "--out", out]) == 0
        rows = read_rows(os.path.join(out, "portfolio_levels.csv"))
        assert all(row["feasible"] == "false" for row in rows)
        assert all("mean floor" in row["note"] for row in rows)

    def test_all_levels_failed_exits_3(self, tmp_path, monkeypatch):
        from fuzzcurve.portfolio import CaseResult, LevelSolution

        def stub(problem, alphas):
            failed = CaseResult((), float("nan"), False, "level failed: stub")
            return [LevelSolution(alpha, failed, failed) for alpha in alphas]

        monkeypatch.setattr(cli, "solve_levels", stub)
        cfg = write_config(tmp_path, base_config())
        out = str(tmp_path / "out")
        argv = ["portfolio", "--config", cfg, "--alphas", "0,1", "--out", out]
        assert run(argv) == 3
        rows = read_rows(os.path.join(out, "portfolio_levels.csv"))
        assert all(row["note"] == "level failed: stub" for row in rows)

    def test_alphas_flag_beats_config(self, tmp_path):
        doc = base_config()
        doc["portfolio"]["alphas"] = [0.0, 1.0]
        cfg = write_config(tmp_path, doc)
        out = str(tmp_path / "out")
        assert run(["portfolio", "--config", cfg, "--alphas", "0.25", "--out", out]) == 0
        rows = read_rows(os.path.join(out, "portfolio_levels.csv"))
        assert [row["alpha"] for row in rows] == ["0.25", "0.25"]

    def test_runs_are_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        out_a = str(tmp_path / "a")
        out_b = str(tmp_path / "b")
        for out in (out_a, out_b):
            assert run(["portfolio", "--config", cfg, "--alphas", "0,0.5,1", "--out", out]) == 0
        with open(os.path.join(out_a, "portfolio_levels.csv"), "rb") as fa:
            with open(os.path.join(out_b, "portfolio_levels.csv"), "rb") as fb:
                assert fa.read() == fb.read()


class TestVersionFlag:
    def test_version_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["--version"])
        assert exc.value.code == 0
        assert "fuzzcurve" in capsys.readouterr().out
