"""Command-line interface: simulate, estimate, bench, and hill subcommands.

A single JSON config file carries the model, mark law, and estimator
settings; command-line flags override individual values. All outputs are
deterministic given the config and seed, with floats printed at 17
significant digits so repeated runs are byte-identical.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .bench import (
    loglog_slope,
    per_run_errors_to_csv,
    reports_to_csv,
    reports_to_json_obj,
    run_lower_bound_audit,
    run_table1,
)
from .errors import InvalidParameterError, NumericalFailure, ResourceLimitError
from .estimator import (
    EstimatorConfig,
    XGrid,
    density_to_csv,
    estimate_density,
    hill_ratio,
    theorem_cutoff,
)
from .model import SmoothnessConfig, marks_from_json, marks_to_json, normalize
from .serialize import dumps_json, format_float, write_text
from .simulate import (
    series_to_csv,
    series_to_f64le,
    simulate_series,
    simulate_trace,
    trace_events_to_csv,
    trace_path_to_csv,
)

_MODEL_KEYS = {"lambda", "alpha", "delta"}
_ESTIMATOR_KEYS = {
    "cutoff",
    "s",
    "use_theorem_bandwidth",
    "C",
    "kappa",
    "kappa_exponent",
    "bin_width",
    "x_grid",
    "renormalize",
}
_SMOOTHNESS_KEYS = {"s", "K", "L", "m"}
_OUTPUT_KEYS = {"dir", "formats"}
_TOP_KEYS = {"model", "marks", "estimator", "smoothness", "seed", "n", "output"}


def _fail(message):
    raise InvalidParameterError(message)


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        _fail(f"{where} must be a JSON object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        _fail(f"unknown fields {unknown} in {where}")


def _load_config(path):
    if path is None:
        _fail("--config is required")
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    except FileNotFoundError:
        _fail(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        _fail(f"config file {path} is not valid JSON: {exc}")
    _check_keys(raw, _TOP_KEYS, "config")
    if "model" not in raw or "marks" not in raw:
        _fail("config must contain 'model' and 'marks'")
    _check_keys(raw["model"], _MODEL_KEYS, "config.model")
    for key in _MODEL_KEYS:
        if key not in raw["model"]:
            _fail(f"config.model is missing {key!r}")
    if "estimator" in raw:
        _check_keys(raw["estimator"], _ESTIMATOR_KEYS, "config.estimator")
    if "smoothness" in raw:
        _check_keys(raw["smoothness"], _SMOOTHNESS_KEYS, "config.smoothness")
    if "output" in raw:
        _check_keys(raw["output"], _OUTPUT_KEYS, "config.output")
    return raw


def _resolve_model(raw):
    model = raw["model"]
    params = normalize(model["lambda"], model["alpha"], model["delta"])
    marks = marks_from_json(raw["marks"])
    return params, marks


def _resolve_seed(raw, args):
    if getattr(args, "seed", None) is not None:
        return args.seed
    return int(raw.get("seed", 0))


def _resolve_n(raw, args, default=None):
    n = getattr(args, "n", None)
    if n is None:
        n = raw.get("n", default)
    if n is None:
        _fail("sample size required: pass --n or set 'n' in the config")
    return int(n)


def _resolve_out_dir(raw, args):
    out = getattr(args, "out", None)
    if out is None:
        out = raw.get("output", {}).get("dir", ".")
    os.makedirs(out, exist_ok=True)
    return out


def _resolve_x_grid(section):
    grid = section.get("x_grid")
    if grid is None:
        return None
    _check_keys(grid, {"start", "step", "count"}, "config.estimator.x_grid")
    for key in ("start", "step", "count"):
        if key not in grid:
            _fail(f"config.estimator.x_grid is missing {key!r}")
    return XGrid(float(grid["start"]), float(grid["step"]), int(grid["count"]))


def _resolve_estimator_config(raw, args, params, n):
    section = dict(raw.get("estimator", {}))
    cutoff = getattr(args, "cutoff", None)
    if cutoff is None:
        cutoff = section.get("cutoff")
    if cutoff is None:
        if section.get("use_theorem_bandwidth"):
            cutoff = theorem_cutoff(n, float(section.get("s", 1.0)), params.ratio)
        else:
            _fail(
                "estimator cutoff unspecified: pass --cutoff, set estimator.cutoff, "
                "or set estimator.use_theorem_bandwidth"
            )
    c_value = getattr(args, "C", None)
    if c_value is None:
        c_value = section.get("C", "adaptive")
    if isinstance(c_value, str) and c_value != "adaptive":
        try:
            c_value = float(c_value)
        except ValueError:
            _fail(f"--C must be a number or 'adaptive', got {c_value!r}")
    kappa = getattr(args, "kappa", None)
    if kappa is None:
        kappa = section.get("kappa")
    bin_width = getattr(args, "bin_width", None)
    if bin_width is None:
        bin_width = section.get("bin_width")
    return EstimatorConfig(
        ratio=params.ratio,
        cutoff=float(cutoff),
        s=float(section.get("s", 1.0)),
        kappa=kappa,
        C=c_value,
        kappa_exponent=int(section.get("kappa_exponent", 2)),
        bin_width=bin_width,
        x_grid=_resolve_x_grid(section),
        renormalize=bool(section.get("renormalize", False)),
    )


def _sidecar(raw, seed, n, extra=None):
    meta = {
        "library": "shotdeconv",
        "version": __version__,
        "model": dict(raw["model"]),
        "marks": marks_to_json(marks_from_json(raw["marks"])),
        "seed": int(seed),
        "n": int(n),
    }
    if extra:
        meta.update(extra)
    return meta


def _read_series_file(path):
    if path.endswith(".f64le") or path.endswith(".bin"):
        with open(path, "rb") as handle:
            data = handle.read()
        if len(data) == 0 or len(data) % 8:
            _fail(f"{path} is not a whole number of little-endian float64 values")
        return np.frombuffer(data, dtype="<f8").copy()
    try:
        values = np.loadtxt(path, delimiter=",", skiprows=1, usecols=1, ndmin=1)
    except (OSError, ValueError) as exc:
        _fail(f"could not read series CSV {path}: {exc}")
    return np.asarray(values, dtype=float)


def _cmd_simulate(args):
    raw = _load_config(args.config)
    params, marks = _resolve_model(raw)
    seed = _resolve_seed(raw, args)
    n = _resolve_n(raw, args)
    out = _resolve_out_dir(raw, args)
    fmt = args.format or "csv"
    if fmt not in ("csv", "f64le"):
        _fail(f"simulate supports --format csv or f64le, got {fmt!r}")
    series = simulate_series(params, marks, n, seed=seed)
    if fmt == "csv":
        write_text(os.path.join(out, "series.csv"), series_to_csv(series))
        data_file = "series.csv"
    else:
        with open(os.path.join(out, "series.f64le"), "wb") as handle:
            handle.write(series_to_f64le(series))
        data_file = "series.f64le"
    meta = _sidecar(raw, seed, n, {"burn_in": series.burn_in, "data_file": data_file})
    write_text(os.path.join(out, "series_meta.json"), dumps_json(meta))
    if args.trace:
        horizon = n * args.grid_step
        trace = simulate_trace(params, marks, horizon, args.grid_step, seed=seed)
        write_text(os.path.join(out, "trace_events.csv"), trace_events_to_csv(trace))
        write_text(os.path.join(out, "trace_path.csv"), trace_path_to_csv(trace))
    return 0


def _cmd_estimate(args):
    raw = _load_config(args.config)
    params, marks = _resolve_model(raw)
    seed = _resolve_seed(raw, args)
    out = _resolve_out_dir(raw, args)
    if args.infile is not None:
        values = _read_series_file(args.infile)
        n = values.size
    else:
        n = _resolve_n(raw, args)
        values = simulate_series(params, marks, n, seed=seed).values
    config = _resolve_estimator_config(raw, args, params, n)
    estimate = estimate_density(values, config)
    write_text(os.path.join(out, "estimate.csv"), density_to_csv(estimate))
    diagnostics = dict(estimate.diagnostics)
    if diagnostics.get("fraction_thresholded") == 1.0:
        diagnostics["warning"] = "every grid point was thresholded; estimate is the bare inversion kernel"
    write_text(os.path.join(out, "diagnostics.json"), dumps_json(diagnostics))
    return 0


def _cmd_bench(args):
    raw = _load_config(args.config)
    params, marks = _resolve_model(raw)
    out = _resolve_out_dir(raw, args)
    base_seed = _resolve_seed(raw, args)
    jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    if args.table1:
        reports = run_table1(params, marks, runs=args.runs, base_seed=base_seed, jobs=jobs)
        write_text(os.path.join(out, "table1.csv"), reports_to_csv(reports))
        write_text(os.path.join(out, "table1_runs.csv"), per_run_errors_to_csv(reports))
        write_text(os.path.join(out, "table1.json"), dumps_json(reports_to_json_obj(reports)))
        return 0
    if args.rate:
        if args.errors is not None:
            n_values, means = _read_errors_csv(args.errors)
            slope, half = loglog_slope(n_values, means)
            report = {
                "slope": slope,
                "half_width": half,
                "n": [int(v) for v in n_values],
                "mean_sup_errors": list(means),
            }
        else:
            from .bench import run_rate_check

            report = run_rate_check(
                params, marks, n_list=(1_000, 10_000, 100_000),
                runs=args.runs, base_seed=base_seed, jobs=jobs,
            )
        write_text(os.path.join(out, "rate.json"), dumps_json(report))
        print(f"slope={format_float(report['slope'])} half_width={format_float(report['half_width'])}")
        return 0
    if args.audit:
        if "smoothness" not in raw:
            _fail("--audit needs a 'smoothness' section in the config")
        sm = raw["smoothness"]
        for key in _SMOOTHNESS_KEYS:
            if key not in sm:
                _fail(f"config.smoothness is missing {key!r}")
        smoothness = SmoothnessConfig(sm["s"], sm["K"], sm["L"], sm["m"])
        report = run_lower_bound_audit(params, marks, smoothness, seed=base_seed)
        write_text(os.path.join(out, "audit.json"), dumps_json(report))
        print(f"audit {'passed' if report['passed'] else 'FAILED'}: min_slack={format_float(report['min_slack'])}")
        return 0
    _fail("bench needs one of --table1, --rate, --audit")


def _read_errors_csv(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            header = handle.readline().strip()
            if header != "n,mean_sup_error":
                _fail(f"{path} must start with header 'n,mean_sup_error', got {header!r}")
            rows = np.loadtxt(handle, delimiter=",", ndmin=2)
    except OSError as exc:
        _fail(f"could not read errors CSV {path}: {exc}")
    except ValueError as exc:
        _fail(f"malformed errors CSV {path}: {exc}")
    if rows.shape[1] != 2:
        _fail(f"{path} must have exactly two columns")
    return rows[:, 0], rows[:, 1]


def _cmd_hill(args):
    raw = _load_config(args.config)
    params, marks = _resolve_model(raw)
    seed = _resolve_seed(raw, args)
    if args.infile is not None:
        values = _read_series_file(args.infile)
    else:
        n = _resolve_n(raw, args)
        values = simulate_series(params, marks, n, seed=seed).values
    estimate = hill_ratio(values, k=args.k)
    k_used = args.k if args.k is not None else min(max(int(values.size**0.6), 1), values.size - 1)
    print(f"ratio_estimate={format_float(estimate)} k={k_used}")
    if args.out is not None:
        out = _resolve_out_dir(raw, args)
        write_text(
            os.path.join(out, "hill.json"),
            dumps_json({"ratio_estimate": estimate, "k": int(k_used), "n": int(values.size)}),
        )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="shotdeconv",
        description="Simulate exponential shot noise and recover the mark density "
        "from regularly sampled observations.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_n=True):
        p.add_argument("--config", required=False, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="64-bit seed (overrides config)")
        p.add_argument("--out", default=None, help="output directory")
        if with_n:
            p.add_argument("--n", type=int, default=None, help="sample size")

    p_sim = sub.add_parser("simulate", help="write a simulated sample series")
    common(p_sim)
    p_sim.add_argument("--format", choices=["csv", "f64le"], default=None)
    p_sim.add_argument("--trace", action="store_true", help="also write an event-level trace")
    p_sim.add_argument("--grid-step", type=float, default=0.01, dest="grid_step",
                       help="trace grid spacing; trace horizon is n * grid-step")
    p_sim.set_defaults(func=_cmd_simulate)

    p_est = sub.add_parser("estimate", help="estimate the mark density")
    common(p_est)
    p_est.add_argument("--in", dest="infile", default=None,
                       help="series file (csv or f64le) instead of simulating")
    p_est.add_argument("--cutoff", type=float, default=None)
    p_est.add_argument("--kappa", type=float, default=None)
    p_est.add_argument("--C", dest="C", default=None, help="threshold constant or 'adaptive'")
    p_est.add_argument("--bin-width", type=float, default=None, dest="bin_width")
    p_est.set_defaults(func=_cmd_estimate)

    p_bench = sub.add_parser("bench", help="Monte-Carlo benchmarks and diagnostics")
    common(p_bench, with_n=False)
    mode = p_bench.add_mutually_exclusive_group(required=True)
    mode.add_argument("--table1", action="store_true", help="sup-error table over sample sizes")
    mode.add_argument("--rate", action="store_true", help="log-log convergence-rate slope")
    mode.add_argument("--audit", action="store_true", help="CF lower-bound audit")
    p_bench.add_argument("--runs", type=int, default=100, help="Monte-Carlo replicates")
    p_bench.add_argument("--jobs", type=int, default=None, help="worker processes")
    p_bench.add_argument("--errors", default=None,
                         help="precomputed 'n,mean_sup_error' CSV for --rate")
    p_bench.set_defaults(func=_cmd_bench)

    p_hill = sub.add_parser("hill", help="estimate the intensity/decay ratio")
    common(p_hill)
    p_hill.add_argument("--in", dest="infile", default=None,
                        help="series file (csv or f64le) instead of simulating")
    p_hill.add_argument("--k", type=int, default=None, help="number of upper order statistics")
    p_hill.set_defaults(func=_cmd_hill)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidParameterError, ResourceLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
