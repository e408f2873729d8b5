"""Command-line front end: config ingestion, CSV tables, SVG figures.

Config documents are JSON with three top-level blocks:

  fuzzy_numbers   named entries of kind triangle {l, m, r}, analytic
                  {d, u expression text}, or panel {estimates}
  portfolio       a program block: variant, mu/cov/skew parameter matrices
                  (numbers are crisp, strings reference named fuzzy numbers,
                  objects are inline entries), thresholds, boxes, alphas
  analysis        options: grid_n, alphas, out

Exit codes: 0 success, 2 config error, 3 numeric failure, 4 I/O error,
5 empty panel intersection.  Every CSV cell uses 12 significant digits with
'.' as the decimal separator and ',' as the field separator; outputs are
written atomically (temp file, then rename) and a run_manifest.json lists
every emitted file with per-stage wall-clock timings.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from contextlib import contextmanager

import numpy as np

from . import __version__
from .aggregate import ExpertInterval, OverlapError, aggregate, to_parametric
from .core import ParametricFN, TriangularFN, polar_at, triangle_to_parametric
from .expr import ExprError, parse_expression
from .geometry import (
    QuadratureError,
    RootBracketError,
    analyze_skewness,
    overall_dispersion,
)
from .portfolio import FuzzyParamSet, PortfolioProblem, crisp_fn, solve_levels

DEFAULT_GRID_N = 1024
DEFAULT_ALPHAS = (0.0, 0.25, 0.5, 0.75, 1.0)
MANIFEST_NAME = "run_manifest.json"


class ConfigError(Exception):
    """The config document cannot be used as given."""


class NumericFailure(Exception):
    """A numeric stage failed; str() names the stage and the cause."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__("%s: %s" % (stage, cause))


class _Stages:
    """Per-stage wall-clock timing plus numeric-error attribution."""

    def __init__(self):
        self.timings = {}

    @contextmanager
    def __call__(self, name):
        start = time.perf_counter()
        try:
            yield
        except OverlapError:
            raise
        except (
            QuadratureError,
            RootBracketError,
            ZeroDivisionError,
            FloatingPointError,
            ValueError,
            ArithmeticError,
        ) as exc:
            raise NumericFailure(name, exc) from exc
        finally:
            self.timings[name] = time.perf_counter() - start


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    x = float(value)
    if x == 0.0:
        x = 0.0
    return "%.12g" % x


def _write_text_atomic(path, text):
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
    os.replace(tmp, path)


def _write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    _write_text_atomic(path, buf.getvalue())


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "fuzzcurve"
    return plt


def _save_figure(fig, path):
    tmp = path + ".tmp"
    fig.savefig(tmp, format="svg", metadata={"Date": None})
    os.replace(tmp, path)


# -- config loading -----------------------------------------------------------


def _checked_pairs(pairs):
    out = {}
    for key, value in pairs:
        if key in out:
            raise ConfigError("duplicate key %r in config" % (key,))
        out[key] = value
    return out


def load_config(path):
    """Parse the JSON config; returns (document, sha256 hex digest)."""
    try:
        with open(path, "rb") as handle:
            data = handle.read()
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc)) from exc
    try:
        doc = json.loads(data.decode("utf-8"), object_pairs_hook=_checked_pairs)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError("config %s is not valid JSON: %s" % (path, exc)) from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    names = doc.get("fuzzy_numbers", {})
    if not isinstance(names, dict):
        raise ConfigError("fuzzy_numbers must be an object of named entries")
    for name in names:
        if not _safe_name(name):
            raise ConfigError(
                "name %r is not usable in file names (letters, digits, '_', "
                "'-', '.' only)" % (name,)
            )
    return doc, hashlib.sha256(data).hexdigest()


def _safe_name(name):
    return bool(name) and all(c.isalnum() or c in "_-." for c in name)


def _require_number(entry, key, where):
    value = entry.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError("%s needs a numeric %r field" % (where, key))
    return float(value)


def _parse_estimates(raw, where):
    if not isinstance(raw, list) or not raw:
        raise ConfigError("%s needs a nonempty estimates list" % (where,))
    out = []
    for i, item in enumerate(raw):
        if isinstance(item, dict):
            source = item.get("source", "e%d" % (i + 1))
            lower = _require_number(item, "lower", where)
            upper = _require_number(item, "upper", where)
        elif isinstance(item, list) and len(item) == 2:
            source = "e%d" % (i + 1)
            lower, upper = item
        else:
            raise ConfigError(
                "%s estimate %d must be an object with lower/upper or a "
                "[lower, upper] pair" % (where, i + 1)
            )
        try:
            out.append(ExpertInterval(source, lower, upper))
        except (TypeError, ValueError) as exc:
            raise ConfigError("%s estimate %d: %s" % (where, i + 1, exc)) from exc
    return out


def build_fn(doc, name):
    """Resolve a named fuzzy_numbers entry into a ParametricFN."""
    names = doc.get("fuzzy_numbers", {})
    if name not in names:
        raise ConfigError("no fuzzy number named %r in config" % (name,))
    return _fn_from_entry(names[name], "fuzzy number %r" % (name,))


def _fn_from_entry(entry, where):
    if not isinstance(entry, dict):
        raise ConfigError("%s must be an object" % (where,))
    kind = entry.get("kind")
    try:
        if kind == "triangle":
            t = TriangularFN(
                _require_number(entry, "l", where),
                _require_number(entry, "m", where),
                _require_number(entry, "r", where),
            )
            return triangle_to_parametric(t)
        if kind == "analytic":
            d, u = entry.get("d"), entry.get("u")
            if not isinstance(d, str) or not isinstance(u, str):
                raise ConfigError("%s needs d and u expression strings" % (where,))
            return ParametricFN(parse_expression(d), parse_expression(u))
        if kind == "panel":
            estimates = _parse_estimates(entry.get("estimates"), where)
            return to_parametric(aggregate(estimates))
    except ConfigError:
        raise
    except OverlapError:
        raise
    except (ExprError, ValueError) as exc:
        raise ConfigError("%s: %s" % (where, exc)) from exc
    raise ConfigError(
        "%s has unknown kind %r (expected triangle, analytic, or panel)" % (where, kind)
    )


def _analysis_block(doc):
    block = doc.get("analysis", {})
    if not isinstance(block, dict):
        raise ConfigError("analysis must be an object")
    return block


def _resolve_out_dir(args, doc):
    block = _analysis_block(doc)
    out = args.out or os.environ.get("FUZZCURVE_OUT") or block.get("out") or "."
    if not isinstance(out, str):
        raise ConfigError("analysis.out must be a directory path string")
    os.makedirs(out, exist_ok=True)
    return out


def _resolve_grid_n(args, doc):
    block = _analysis_block(doc)
    grid_n = args.grid if args.grid is not None else block.get("grid_n", DEFAULT_GRID_N)
    if isinstance(grid_n, bool) or not isinstance(grid_n, int) or grid_n < 2:
        raise ConfigError("grid_n must be an integer of at least 2")
    return grid_n


def _parse_alpha_list(values, where):
    alphas = []
    for value in values:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError("%s must contain numbers" % (where,))
        value = float(value)
        if not 0.0 <= value <= 1.0:
            raise ConfigError("%s values must lie in [0, 1]" % (where,))
        alphas.append(value)
    if not alphas:
        raise ConfigError("%s must not be empty" % (where,))
    return alphas


def _resolve_alphas(args, doc, block):
    if getattr(args, "alphas", None):
        try:
            raw = [float(part) for part in args.alphas.split(",") if part.strip() != ""]
        except ValueError as exc:
            raise ConfigError("--alphas must be comma-separated numbers") from exc
        return _parse_alpha_list(raw, "--alphas")
    if "alphas" in block:
        return _parse_alpha_list(block["alphas"], "portfolio.alphas")
    analysis = _analysis_block(doc)
    if "alphas" in analysis:
        return _parse_alpha_list(analysis["alphas"], "analysis.alphas")
    return list(DEFAULT_ALPHAS)


def _write_manifest(out_dir, command, digest, artifacts, stages):
    listed = sorted(set(artifacts) | {MANIFEST_NAME})
    payload = {
        "tool_version": __version__,
        "command": command,
        "config_digest": "sha256:" + digest,
        "artifacts": listed,
        "stages": stages.timings,
    }
    _write_text_atomic(
        os.path.join(out_dir, MANIFEST_NAME), json.dumps(payload, indent=2) + "\n"
    )


# -- analyze ------------------------------------------------------------------


def _profiles_arrays(fn, mean, grid_n):
    grid = np.linspace(0.0, 1.0, grid_n + 1)
    d_vals, u_vals, d_slopes, u_slopes = fn.sample(grid)
    r_vals = np.empty(grid_n + 1)
    gamma_vals = np.empty(grid_n + 1)
    for i, alpha in enumerate(grid):
        p = polar_at(fn, float(alpha))
        r_vals[i] = p.magnitude
        gamma_vals[i] = p.angle
    under = mean.l + grid * (mean.m - mean.l)
    over = mean.r - grid * (mean.r - mean.m)
    level = np.maximum(np.abs(u_vals - over), np.abs(d_vals - under))
    return grid, d_vals, u_vals, d_slopes, u_slopes, r_vals, gamma_vals, level


def _analyze_figures(out_dir, name, arrays):
    plt = _plt()
    grid, d_vals, u_vals, _, _, r_vals, gamma_vals, level = arrays
    paths = []

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(d_vals, grid, label="left side")
    ax.plot(u_vals, grid, label="right side")
    ax.set_xlabel("x")
    ax.set_ylabel("membership")
    ax.set_title("%s membership" % name)
    ax.legend()
    paths.append("%s_membership.svg" % name)
    _save_figure(fig, os.path.join(out_dir, paths[-1]))
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot((d_vals + u_vals) / 2.0, (u_vals - d_vals) / 2.0)
    ax.set_xlabel("(d + u) / 2")
    ax.set_ylabel("(u - d) / 2")
    ax.set_title("%s transformed curve" % name)
    ax.set_aspect("equal", adjustable="datalim")
    paths.append("%s_curve.svg" % name)
    _save_figure(fig, os.path.join(out_dir, paths[-1]))
    plt.close(fig)

    fig, (ax_angle, ax_mag) = plt.subplots(2, 1, figsize=(6.0, 5.0), sharex=True)
    ax_angle.plot(grid, gamma_vals)
    ax_angle.axhline(0.0, linewidth=0.5)
    ax_angle.set_ylabel("tangent angle (rad)")
    ax_angle.set_title("%s tangent profile" % name)
    ax_mag.plot(grid, r_vals)
    ax_mag.set_xlabel("alpha")
    ax_mag.set_ylabel("tangent magnitude")
    paths.append("%s_polar.svg" % name)
    _save_figure(fig, os.path.join(out_dir, paths[-1]))
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(grid, level)
    ax.set_xlabel("alpha")
    ax.set_ylabel("level dispersion")
    ax.set_title("%s dispersion" % name)
    paths.append("%s_dispersion.svg" % name)
    _save_figure(fig, os.path.join(out_dir, paths[-1]))
    plt.close(fig)
    return paths


def cmd_analyze(args):
    doc, digest = load_config(args.config)
    out_dir = _resolve_out_dir(args, doc)
    grid_n = _resolve_grid_n(args, doc)
    stages = _Stages()
    name = args.name
    fn = build_fn(doc, name)
    with stages("analyze"):
        report = analyze_skewness(fn, grid_n)
        dispersion = overall_dispersion(fn, report.mean_triangle)
    with stages("profiles"):
        arrays = _profiles_arrays(fn, report.mean_triangle, grid_n)
    artifacts = []
    with stages("figures"):
        artifacts.extend(_analyze_figures(out_dir, name, arrays))
    with stages("write"):
        report_name = "%s_report.csv" % name
        _write_csv(
            os.path.join(out_dir, report_name),
            [
                "curve_length",
                "overall_skewness_rad",
                "overall_skewness_pi",
                "sign_changes",
                "alpha_mean",
                "mean_l",
                "mean_m",
                "mean_r",
                "overall_dispersion",
                "degenerate",
            ],
            [
                [
                    report.curve_length,
                    report.overall_skewness,
                    report.overall_skewness / math.pi,
                    ";".join(_fmt(root) for root in report.sign_changes),
                    report.alpha_mean,
                    report.mean_triangle.l,
                    report.mean_triangle.m,
                    report.mean_triangle.r,
                    dispersion,
                    report.degenerate,
                ]
            ],
        )
        artifacts.append(report_name)
        profiles_name = "%s_profiles.csv" % name
        grid, d_vals, u_vals, d_slopes, u_slopes, r_vals, gamma_vals, level = arrays
        _write_csv(
            os.path.join(out_dir, profiles_name),
            ["alpha", "d", "u", "d_prime", "u_prime", "r", "gamma", "level_dispersion"],
            zip(grid, d_vals, u_vals, d_slopes, u_slopes, r_vals, gamma_vals, level),
        )
        artifacts.append(profiles_name)
    _write_manifest(out_dir, "analyze", digest, artifacts, stages)
    return 0


# -- aggregate ----------------------------------------------------------------


def _staircase_figure(out_dir, panel, staircase, fn):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for mem, (lo, up) in staircase.levels:
        ax.hlines(mem, lo, up, linewidth=2.0)
    grid = np.linspace(0.0, 1.0, 257)
    d_vals, u_vals, _, _ = fn.sample(grid)
    ax.plot(d_vals, grid, linestyle="--", label="joined left side")
    ax.plot(u_vals, grid, linestyle="--", label="joined right side")
    ax.plot([staircase.apex], [1.0], marker="o")
    ax.set_xlabel("x")
    ax.set_ylabel("membership")
    ax.set_title("%s staircase" % panel)
    ax.legend()
    path = "%s_staircase.svg" % panel
    _save_figure(fig, os.path.join(out_dir, path))
    plt.close(fig)
    return path


def cmd_aggregate(args):
    doc, digest = load_config(args.config)
    out_dir = _resolve_out_dir(args, doc)
    stages = _Stages()
    panel = args.panel
    names = doc.get("fuzzy_numbers", {})
    if panel not in names:
        raise ConfigError("no fuzzy number named %r in config" % (panel,))
    entry = names[panel]
    if not isinstance(entry, dict) or entry.get("kind") != "panel":
        raise ConfigError("%r is not a panel entry" % (panel,))
    estimates = _parse_estimates(entry.get("estimates"), "panel %r" % (panel,))
    with stages("aggregate"):
        staircase = aggregate(estimates)
        fn = to_parametric(staircase)
    artifacts = []
    with stages("figures"):
        artifacts.append(_staircase_figure(out_dir, panel, staircase, fn))
    with stages("write"):
        levels_name = "%s_levels.csv" % panel
        _write_csv(
            os.path.join(out_dir, levels_name),
            ["membership", "lower", "upper"],
            [[mem, lo, up] for mem, (lo, up) in staircase.levels],
        )
        artifacts.append(levels_name)
        knots_name = "%s_knots.csv" % panel
        rows = [["d", alpha, value] for alpha, value in fn.d.knots]
        rows += [["u", alpha, value] for alpha, value in fn.u.knots]
        _write_csv(os.path.join(out_dir, knots_name), ["side", "alpha", "value"], rows)
        artifacts.append(knots_name)
    _write_manifest(out_dir, "aggregate", digest, artifacts, stages)
    return 0


# -- portfolio ----------------------------------------------------------------


def _param_fn(doc, item, where):
    if isinstance(item, bool):
        raise ConfigError("%s must be a number, name, or entry object" % (where,))
    if isinstance(item, (int, float)):
        return crisp_fn(item)
    if isinstance(item, str):
        return build_fn(doc, item)
    if isinstance(item, dict):
        return _fn_from_entry(item, where)
    raise ConfigError("%s must be a number, name, or entry object" % (where,))


def _portfolio_problem(doc, block):
    for key in ("mu", "cov", "skew"):
        if key not in block:
            raise ConfigError("portfolio needs a %r list" % (key,))
    mu_raw, cov_raw, skew_raw = block["mu"], block["cov"], block["skew"]
    if not isinstance(mu_raw, list) or not mu_raw:
        raise ConfigError("portfolio.mu must be a nonempty list")
    n = len(mu_raw)
    if not isinstance(skew_raw, list) or len(skew_raw) != n:
        raise ConfigError("portfolio.skew must match mu in length")
    if (
        not isinstance(cov_raw, list)
        or len(cov_raw) != n
        or any(not isinstance(row, list) or len(row) != n for row in cov_raw)
    ):
        raise ConfigError("portfolio.cov must be an n by n matrix")
    mu = [_param_fn(doc, item, "portfolio.mu[%d]" % i) for i, item in enumerate(mu_raw)]
    skew = [
        _param_fn(doc, item, "portfolio.skew[%d]" % i) for i, item in enumerate(skew_raw)
    ]
    cov = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1):
            if cov_raw[i][j] != cov_raw[j][i]:
                raise ConfigError(
                    "portfolio.cov entries (%d, %d) and (%d, %d) differ" % (i, j, j, i)
                )
            cov[i][j] = cov[j][i] = _param_fn(
                doc, cov_raw[i][j], "portfolio.cov[%d][%d]" % (i, j)
            )
    boxes = block.get("boxes")
    if boxes is not None:
        if not isinstance(boxes, list) or any(
            not isinstance(b, list) or len(b) != 2 for b in boxes
        ):
            raise ConfigError("portfolio.boxes must be a list of [lower, upper] pairs")
        try:
            boxes = tuple((float(lo), float(hi)) for lo, hi in boxes)
        except (TypeError, ValueError) as exc:
            raise ConfigError("portfolio.boxes entries must be numeric") from exc
    variant = block.get("variant", "min-variance")
    try:
        params = FuzzyParamSet(mu, cov, skew)
        return PortfolioProblem(
            params,
            float(block.get("mu_base", 0.0)),
            float(block.get("var_cap", 1.0)),
            float(block.get("skew_base", -1.0)),
            boxes,
            variant,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError("portfolio block invalid: %s" % (exc,)) from exc


def _portfolio_figure(out_dir, alphas, solutions):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    lows = [
        level.lower_case.objective if level.lower_case.weights else float("nan")
        for level in solutions
    ]
    highs = [
        level.upper_case.objective if level.upper_case.weights else float("nan")
        for level in solutions
    ]
    ax.plot(alphas, lows, marker="o", label="pessimistic")
    ax.plot(alphas, highs, marker="o", label="optimistic")
    ax.set_xlabel("alpha")
    ax.set_ylabel("objective")
    ax.set_title("objective interval by level")
    ax.legend()
    path = "portfolio_intervals.svg"
    _save_figure(fig, os.path.join(out_dir, path))
    plt.close(fig)
    return path


def cmd_portfolio(args):
    doc, digest = load_config(args.config)
    out_dir = _resolve_out_dir(args, doc)
    stages = _Stages()
    block = doc.get("portfolio")
    if not isinstance(block, dict):
        raise ConfigError("config has no portfolio block")
    problem = _portfolio_problem(doc, block)
    alphas = _resolve_alphas(args, doc, block)
    with stages("solve"):
        solutions = solve_levels(problem, alphas)
    n = problem.params.n_assets
    artifacts = []
    with stages("figures"):
        artifacts.append(_portfolio_figure(out_dir, alphas, solutions))
    with stages("write"):
        header = ["alpha", "endpoint"]
        header += ["w%d" % (i + 1) for i in range(n)]
        header += ["objective", "feasible", "note"]
        rows = []
        for level in solutions:
            for endpoint, case in (("lower", level.lower_case), ("upper", level.upper_case)):
                weights = list(case.weights) or [float("nan")] * n
                rows.append(
                    [level.alpha, endpoint, *weights, case.objective, case.feasible, case.note]
                )
        _write_csv(os.path.join(out_dir, "portfolio_levels.csv"), header, rows)
        artifacts.append("portfolio_levels.csv")
    _write_manifest(out_dir, "portfolio", digest, artifacts, stages)
    failed = all(
        level.lower_case.note.startswith("level failed")
        and level.upper_case.note.startswith("level failed")
        for level in solutions
    )
    return 3 if failed else 0


# -- entry point --------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fuzzcurve",
        description="Analyze fuzzy numbers as parameterized curves: skewness, "
        "dispersion, expert aggregation, and level-wise portfolio programs.",
    )
    parser.add_argument(
        "--version", action="version", version="fuzzcurve %s" % __version__
    )
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="skewness and dispersion report for one entry")
    analyze.add_argument("--config", required=True, help="JSON config path")
    analyze.add_argument("--name", required=True, help="fuzzy number entry to analyze")
    analyze.add_argument("--grid", type=int, default=None, help="profile grid intervals")
    analyze.add_argument("--out", default=None, help="output directory")
    analyze.set_defaults(func=cmd_analyze)

    agg = sub.add_parser("aggregate", help="aggregate an expert panel entry")
    agg.add_argument("--config", required=True, help="JSON config path")
    agg.add_argument("--panel", required=True, help="panel entry to aggregate")
    agg.add_argument("--out", default=None, help="output directory")
    agg.set_defaults(func=cmd_aggregate)

    port = sub.add_parser("portfolio", help="solve the portfolio block level-wise")
    port.add_argument("--config", required=True, help="JSON config path")
    port.add_argument("--alphas", default=None, help="comma-separated levels in [0, 1]")
    port.add_argument("--out", default=None, help="output directory")
    port.set_defaults(func=cmd_portfolio)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except OverlapError as exc:
        print("empty intersection: %s" % exc, file=sys.stderr)
        return 5
    except NumericFailure as exc:
        print("numeric failure in %s" % exc, file=sys.stderr)
        return 3
    except OSError as exc:
        print("i/o error: %s" % exc, file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
