"""Command-line experiment runner.

    spinest fig1  [--particles N] [--trials T] [--seed S] [--out DIR]
    spinest fig2  [--particles N] [--points K] [--out DIR]
    spinest fig3  [--particles 2,4,...] [--n-max 9] [--out DIR]
    spinest table --strategy {bound,adaptive,xyz,coherent} [--particles 1:10] ...
    spinest replay MANIFEST [--out DIR] [--threads K]

Every command accepts ``--seed --trials --out --config --threads``.  Values
come from built-in defaults, then the ``key=value`` config file, then flags.
Exit codes: 0 success, 2 parameter error, 3 I/O error, 4 convergence failure.
"""
from __future__ import annotations

import argparse
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import backend_name
from .geometry import SeededRng
from .output import commit_outputs, csv_bytes, line_plot, load_manifest, manifest_bytes
from .posterior import AXIS, make_coherent_posterior
from .strategies import (
    ADAPTIVE_N_PHI,
    ADAPTIVE_N_THETA,
    ADAPTIVE_STREAM,
    DEFAULT_TRIALS,
    XYZ_STREAM,
    ConvergenceError,
    optimal_repetitions,
    simulate_adaptive,
    simulate_xyz,
    standard_bound,
)

EXIT_OK = 0
EXIT_PARAMETER = 2
EXIT_IO = 3
EXIT_CONVERGENCE = 4

STRATEGIES = ("bound", "adaptive", "xyz", "coherent")
FIG3_DEFAULT_N = "2,4,6,8,10,12,20,40,60,120,240,600,1200,2520"

COMMON_DEFAULTS = {"seed": 0, "trials": DEFAULT_TRIALS, "out": ".", "threads": 1}
COMMAND_DEFAULTS = {
    "fig1": {"particles": 100, "grid_theta": ADAPTIVE_N_THETA, "grid_phi": ADAPTIVE_N_PHI},
    "fig2": {"particles": 20, "points": 2001},
    "fig3": {"particles": FIG3_DEFAULT_N, "n_max": 9},
    "table": {"strategy": None, "particles": "1:10", "n_max": 9,
              "grid_theta": ADAPTIVE_N_THETA, "grid_phi": ADAPTIVE_N_PHI},
}
# keys that never influence output content
RUNTIME_KEYS = ("out", "threads", "config")


class ParameterError(ValueError):
    pass


# -- parameter handling -----------------------------------------------------------


def parse_config(path):
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ParameterError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def parse_int_list(text):
    """``"1:10"`` (inclusive range), ``"1:10:3"`` (with step) or ``"2,4,8"``."""
    text = str(text).strip()
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) == 2:
                lo, hi, step = parts[0], parts[1], 1
            elif len(parts) == 3:
                lo, hi, step = parts
            else:
                raise ValueError
            if step < 1:
                raise ValueError
            return list(range(lo, hi + 1, step))
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ParameterError(f"cannot parse particle list {text!r}") from None


def _as_int(params, key, minimum=None):
    try:
        value = int(params[key])
    except (TypeError, ValueError):
        raise ParameterError(f"{key} must be an integer, got {params[key]!r}") from None
    if minimum is not None and value < minimum:
        raise ParameterError(f"{key} must be >= {minimum}, got {value}")
    return value


def resolve_parameters(command, flags):
    """Merge defaults < config file < explicit flags."""
    params = dict(COMMON_DEFAULTS)
    params.update(COMMAND_DEFAULTS[command])
    config_path = flags.get("config")
    if config_path:
        for key, value in parse_config(config_path).items():
            if key not in params:
                raise ParameterError(f"unknown config key {key!r} for {command}")
            params[key] = value
    for key, value in flags.items():
        if key == "config" or value is None:
            continue
        params[key] = value
    params["seed"] = _as_int(params, "seed", 0)
    if params["seed"] >= 2**64:
        raise ParameterError("seed must fit in 64 bits")
    params["trials"] = _as_int(params, "trials", 1)
    params["threads"] = _as_int(params, "threads", 1)
    params["out"] = str(params["out"])
    return params


# -- commands ---------------------------------------------------------------------


def run_fig1(params):
    n = _as_int(params, "particles", 1)
    grid = (_as_int(params, "grid_theta", 2), _as_int(params, "grid_phi", 4))
    trials = params["trials"]
    run = simulate_adaptive(n, trials=trials, rng=SeededRng(params["seed"], ADAPTIVE_STREAM),
                            threads=params["threads"], grid=grid)
    rows = []
    for k in range(n):
        se = run.trace_std_error[k] if trials > 1 else None
        rows.append((k + 1, run.trace[k], se, standard_bound(k + 1)))
    idx = [r[0] for r in rows]
    svg = line_plot(
        [("adaptive", idx, [r[1] for r in rows]), ("(N+1)/(N+2)", idx, [r[3] for r in rows])],
        title="Adaptive Stern-Gerlach estimation", xlabel="particles", ylabel="mean fidelity")
    files = {
        "fig1.csv": csv_bytes(["particle_index", "mean_fidelity", "std_error", "standard_bound"], rows),
        "fig1.svg": svg,
    }
    return files, {"resampled_trials": run.resampled_trials}


def run_fig2(params):
    total = _as_int(params, "particles", 2)
    if total % 2:
        raise ParameterError(f"particle count must be even, got {total}")
    points = _as_int(params, "points", 3)
    post = make_coherent_posterior(total // 2, 1)
    thetas = np.linspace(0.0, AXIS, points)
    dens = post.density(thetas)
    rows = list(zip(thetas.tolist(), dens.tolist()))
    svg = line_plot([(f"N = {total}", thetas.tolist(), dens.tolist())],
                    title="Posterior after balanced up/down detection", xlabel="theta [rad]",
                    ylabel="density [1/sr]")
    return {"fig2.csv": csv_bytes(["theta", "density"], rows), "fig2.svg": svg}, {}


def _check_even(values):
    for n in values:
        if n < 2 or n % 2:
            raise ParameterError(f"particle counts must be even and >= 2, got {n}")


def run_fig3(params):
    n_list = parse_int_list(params["particles"])
    if not n_list:
        raise ParameterError("empty particle list")
    _check_even(n_list)
    n_max = _as_int(params, "n_max", 1)
    rows = []
    markers = []
    per_n = {}
    for total in n_list:
        scan = optimal_repetitions(total, n_max)
        for n, s in sorted(scan.scores.items()):
            rows.append((total, n, s, n == scan.best))
            per_n.setdefault(n, ([], []))
            per_n[n][0].append(total)
            per_n[n][1].append(s)
        markers.append((total, scan.scores[scan.best]))
    series = [(f"n = {n}", xs, ys) for n, (xs, ys) in sorted(per_n.items())]
    svg = line_plot(series, title="Coherent group measurements", xlabel="N", ylabel="score",
                    logx=True, markers=markers)
    return {"fig3.csv": csv_bytes(["N", "n", "score", "optimal"], rows), "fig3.svg": svg}, {}


def run_table(params):
    strategy = params.get("strategy")
    if strategy not in STRATEGIES:
        raise ParameterError(f"unknown strategy {strategy!r}; choose from {', '.join(STRATEGIES)}")
    n_list = parse_int_list(params["particles"])
    if not n_list:
        raise ParameterError("empty particle list")
    seed, trials = params["seed"], params["trials"]
    rows = []
    extra = {}
    if strategy == "bound":
        for n in n_list:
            if n < 0:
                raise ParameterError("particle counts must be non-negative")
            rows.append((n, None, standard_bound(n), 0.0, None, None))
    elif strategy == "adaptive":
        grid = (_as_int(params, "grid_theta", 2), _as_int(params, "grid_phi", 4))
        resampled = 0
        for n in n_list:
            if n < 0:
                raise ParameterError("particle counts must be non-negative")
            run = simulate_adaptive(n, trials=trials, rng=SeededRng(seed, ADAPTIVE_STREAM),
                                    threads=params["threads"], grid=grid)
            se = run.estimate.std_error if trials > 1 else None
            rows.append((n, None, run.estimate.mean_fidelity, se, trials, seed))
            resampled += run.resampled_trials
        extra["resampled_trials"] = resampled
    elif strategy == "xyz":
        for n in n_list:
            if n < 3 or n % 3:
                raise ParameterError(f"xyz needs particle counts divisible by 3, got {n}")
            est = simulate_xyz(n, trials=trials, rng=SeededRng(seed, XYZ_STREAM),
                               threads=params["threads"])
            se = est.std_error if trials > 1 else None
            rows.append((n, None, est.mean_fidelity, se, trials, seed))
    else:
        _check_even(n_list)
        n_max = _as_int(params, "n_max", 1)
        for total in n_list:
            scan = optimal_repetitions(total, n_max)
            for n, s in sorted(scan.scores.items()):
                rows.append((total, n, s, 0.0, None, None))
    name = f"table_{strategy}.csv"
    return {name: csv_bytes(["N", "n", "score", "std_error", "trials", "seed"], rows)}, extra


RUNNERS = {"fig1": run_fig1, "fig2": run_fig2, "fig3": run_fig3, "table": run_table}


def execute(command, params):
    """Run one command with resolved parameters; returns the manifest dict."""
    started = datetime.now(timezone.utc).isoformat()
    files, extra = RUNNERS[command](params)
    finished = datetime.now(timezone.utc).isoformat()
    content = {k: v for k, v in params.items() if k not in RUNTIME_KEYS}
    manifest = {
        "command": command,
        "parameters": content,
        "seed": params["seed"],
        "tool_version": __version__,
        "backend": backend_name(),
        "threads": params["threads"],
        "started": started,
        "finished": finished,
    }
    manifest.update(extra)
    records = commit_outputs(params["out"], files)
    manifest["output_files"] = records
    commit_outputs(params["out"], {f"{command}_manifest.json": manifest_bytes(manifest)})
    return manifest


# -- argument parsing ---------------------------------------------------------------


def _common_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="64-bit RNG seed")
    common.add_argument("--trials", type=int, default=None, help="Monte Carlo trials")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--config", default=None, help="key=value configuration file")
    common.add_argument("--threads", type=int, default=None, help="worker threads")
    return common


def build_parser():
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="spinest", description="Spin-direction estimation experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fig1", parents=[common], help="adaptive Stern-Gerlach fidelity trace")
    p.add_argument("--particles", type=int, default=None)
    p.add_argument("--grid-theta", dest="grid_theta", type=int, default=None)
    p.add_argument("--grid-phi", dest="grid_phi", type=int, default=None)

    p = sub.add_parser("fig2", parents=[common], help="balanced-outcome coherent posterior")
    p.add_argument("--particles", type=int, default=None, help="total particle count (even)")
    p.add_argument("--points", type=int, default=None, help="theta samples in the CSV")

    p = sub.add_parser("fig3", parents=[common], help="coherent scores vs repetitions")
    p.add_argument("--particles", default=None, help="comma list or lo:hi[:step] of even N")
    p.add_argument("--n-max", dest="n_max", type=int, default=None)

    p = sub.add_parser("table", parents=[common], help="score vs N for one strategy")
    p.add_argument("--strategy", default=None, help="bound, adaptive, xyz or coherent")
    p.add_argument("--particles", default=None, help="comma list or lo:hi[:step]")
    p.add_argument("--n-max", dest="n_max", type=int, default=None)
    p.add_argument("--grid-theta", dest="grid_theta", type=int, default=None)
    p.add_argument("--grid-phi", dest="grid_phi", type=int, default=None)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=None)
    return parser


def _replay_parameters(args):
    manifest = load_manifest(args.manifest)
    command = manifest["command"]
    if command not in RUNNERS:
        raise ParameterError(f"manifest names unknown command {command!r}")
    flags = dict(manifest["parameters"])
    flags["seed"] = manifest["seed"]
    flags["out"] = args.out if args.out is not None else str(Path(args.manifest).parent)
    flags["threads"] = args.threads
    return command, flags


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            command, flags = _replay_parameters(args)
        else:
            command = args.command
            flags = {k: v for k, v in vars(args).items() if k != "command"}
        params = resolve_parameters(command, flags)
        manifest = execute(command, params)
    except ParameterError as exc:
        print(f"spinest: error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except ConvergenceError as exc:
        print(f"spinest: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except OSError as exc:
        print(f"spinest: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (KeyError, ValueError) as exc:
        print(f"spinest: error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    for record in manifest["output_files"]:
        print(Path(params["out"]) / record["path"])
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
