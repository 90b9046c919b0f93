"""Command-line front end.

stdout carries data (CSV or JSON); stderr carries the resolved config and
errors.  Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

from . import __version__
from .harness import (
    ExperimentConfig,
    de_report,
    run_alpha_experiment,
    run_graph_experiment,
    run_symmetric_experiment,
    run_tree_experiment,
    sweep,
)

__all__ = ["main", "build_parser"]

_DEFAULTS = ExperimentConfig()


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from err


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from err


def _model_flags(p, n_default):
    g = p.add_argument_group("model")
    S = argparse.SUPPRESS
    g.add_argument("--n", type=int, default=S, help=f"vertex count (default {n_default})")
    g.add_argument("--rho", type=float, default=S,
                   help=f"probability of the + cluster, in (0,1) (default {_DEFAULTS.rho})")
    g.add_argument("--b", type=float, default=S,
                   help=f"cross-cluster rate b, edge probability b/n (default {_DEFAULTS.b})")
    g.add_argument("--mu", type=float, default=S,
                   help=f"signal of the + cluster, a = b + mu sqrt(b) (default {_DEFAULTS.mu})")
    g.add_argument("--nu", type=float, default=S,
                   help=f"signal of the - cluster, c = b + nu sqrt(b) (default {_DEFAULTS.nu})")
    g.add_argument("--a", type=float, default=S,
                   help="raw within-+ rate a, overrides --mu (default: from mu)")
    g.add_argument("--c", type=float, default=S,
                   help="raw within-- rate c, overrides --nu (default: from nu)")


def _run_flags(p, t_default, trials_default):
    g = p.add_argument_group("run")
    S = argparse.SUPPRESS
    g.add_argument("--t", dest="t_list", type=_int_list, default=S,
                   help=f"comma-separated BP depths (default {t_default})")
    g.add_argument("--trials", type=int, default=S,
                   help=f"Monte Carlo trials, >= 1 (default {trials_default})")
    g.add_argument("--seed", type=int, default=S, help=f"master seed (default {_DEFAULTS.seed})")
    g.add_argument("--threads", type=int, default=S,
                   help=f"worker processes for independent trials (default {_DEFAULTS.threads})")
    g.add_argument("--abs-floor", dest="abs_floor", type=float, default=S,
                   help=f"absolute tolerance floor (default {_DEFAULTS.abs_floor})")
    g.add_argument("--k-sigma", dest="k_sigma", type=float, default=S,
                   help=f"tolerance in standard errors (default {_DEFAULTS.k_sigma})")


def _io_flags(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="stdout format (default csv)")
    p.add_argument("--out", default=argparse.SUPPRESS,
                   help="write <out>.csv and <out>.json as well (default: stdout only)")
    p.add_argument("--config", default=None,
                   help="JSON config, or a previous --format json output, to re-run; "
                        "explicit flags override it (default none)")


# per-subcommand config defaults that differ from ExperimentConfig
_SUB_DEFAULTS = {
    "graph-sim": {"n": 200_000, "t_list": [1, 2, 3, 4], "trials": 10},
    "tree-sim": {"t_list": [1, 2], "trials": 10_000, "alphas": [0.0, 0.1, 0.25, 0.4, 0.5]},
    "symmetric-sim": {"n": 2**17, "mu": 3.0, "nu": 3.0, "t_list": [6], "trials": 1,
                      "accounting": "flip"},
    "alpha": {"n": 2**17, "mu": 3.0, "nu": 3.0, "trials": 1},
    "sweep": {"n": 10**6, "b": 100.0, "rho": 0.01, "mu": 50.0, "nu": 0.0},
    "de": {"n": 10**6, "b": 100.0, "mu": 3.0, "nu": 0.0},
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sbmbp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def add(name, help_text):
        d = {**_DEFAULTS.to_dict(), **_SUB_DEFAULTS[name]}
        p = sub.add_parser(name, help=help_text, description=help_text)
        _model_flags(p, d["n"])
        return p, d

    p, d = add("de", "fixed points, trajectories and Q-predictions (no sampling)")
    p.add_argument("--alpha", type=float, default=None,
                   help="initial partition error for the U-trajectory (default none)")
    p.add_argument("--t-max", dest="t_max", type=int, default=10,
                   help="trajectory length (default 10)")
    _io_flags(p)

    p, d = add("graph-sim", "Algorithm 1 on sampled graphs vs the density-evolution prediction")
    _run_flags(p, d["t_list"], d["trials"])
    p.add_argument("--accounting", choices=("plain", "flip"), default=argparse.SUPPRESS,
                   help="error column used for pass/fail (default plain)")
    _io_flags(p)

    p, d = add("tree-sim", "tree MAP errors, noisy-boundary errors and Gaussian KS distances")
    _run_flags(p, d["t_list"], d["trials"])
    p.add_argument("--b-list", dest="b_list", type=_float_list, default=argparse.SUPPRESS,
                   help="comma-separated b values (default: --b)")
    p.add_argument("--alphas", type=_float_list, default=argparse.SUPPRESS,
                   help=f"noisy-boundary flip rates in [0,1/2] (default {d['alphas']})")
    _io_flags(p)

    p, d = add("symmetric-sim", "Algorithm 2 (warm-started BP) vs Q(sqrt(v_upper))")
    _run_flags(p, d["t_list"], d["trials"])
    p.add_argument("--mode", choices=("fast", "faithful"), default=argparse.SUPPRESS,
                   help="fast: one recovery run; faithful: per-probe reruns (default fast)")
    p.add_argument("--recovery", choices=("lanczos", "power"), default=argparse.SUPPRESS,
                   help="spectral recovery method (default lanczos)")
    p.add_argument("--exclude-reserved", dest="include_reserved", action="store_false",
                   default=argparse.SUPPRESS,
                   help="score pass/fail without the randomly labelled set U")
    _io_flags(p)

    p, d = add("sweep", "h' curves and map curves with bracketed fixed points")
    p.add_argument("--points", type=int, default=121, help="grid points on [0, v-max] (default 121)")
    p.add_argument("--v-max", dest="v_max", type=float, default=6.0,
                   help="upper end of the v grid for h' curves (default 6)")
    _io_flags(p)

    p, d = add("alpha", "estimate the partition error of spectral recovery on sampled graphs")
    _run_flags(p, [1], d["trials"])
    p.add_argument("--recovery", choices=("lanczos", "power"), default=argparse.SUPPRESS,
                   help="spectral recovery method (default lanczos)")
    _io_flags(p)
    parser.subcommands = sub.choices
    return parser


_CONFIG_KEYS = {f for f in _DEFAULTS.to_dict()}


def _resolve(args) -> ExperimentConfig:
    base = {**_DEFAULTS.to_dict(), **_SUB_DEFAULTS[args.command]}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as err:
            raise UsageError(f"cannot read config {args.config!r}: {err}") from err
        if isinstance(data, dict) and isinstance(data.get("config"), dict):
            data = data["config"]
        if not isinstance(data, dict) or set(data) - _CONFIG_KEYS:
            raise UsageError(f"config {args.config!r} has unknown keys")
        base.update(data)
    for key, value in vars(args).items():
        if key in _CONFIG_KEYS and key != "out":
            base[key] = value
    if hasattr(args, "out"):
        base["out"] = args.out
    try:
        config = ExperimentConfig.from_dict(base)
        config.params()
        return config
    except (TypeError, ValueError) as err:
        raise UsageError(f"sbmbp {args.command}: error: {err}") from err


def _emit(report, fmt, out):
    if out:
        report.write(out)
    sys.stdout.write(report.to_json() if fmt == "json" else report.to_csv())


def _de_csv(rep: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "value"])
    fp = rep["fixed_points"]
    for k in ("v_lower", "v_upper", "unique", "residual_lower", "residual_upper", "error"):
        if k in fp:
            w.writerow([k, fp[k]])
    for k in ("q_sqrt_v_upper", "prediction_v_lower", "prediction_v_upper"):
        if k in rep:
            w.writerow([k, rep[k]])
    for name in ("v", "w", "u"):
        start = 0 if name == "v" else 1
        for i, x in enumerate(rep.get(f"{name}_trajectory", [])):
            w.writerow([f"{name}_{i + start}", x])
    return buf.getvalue()


def _run(args, config: ExperimentConfig) -> int:
    cmd = args.command
    out = getattr(args, "out", None)
    if cmd == "de":
        params = config.params()
        if args.alpha is not None and not 0.0 <= args.alpha < 0.5:
            raise UsageError("sbmbp de: error: --alpha must lie in [0, 1/2)")
        if args.t_max < 1:
            raise UsageError("sbmbp de: error: --t-max must be >= 1")
        rep = de_report(params, args.alpha, args.t_max)
        rep["config"] = config.to_dict()
        text = (json.dumps(rep, sort_keys=True, indent=2) + "\n" if args.format == "json"
                else _de_csv(rep))
        if out:
            with open(out, "w") as fh:
                fh.write(text)
        sys.stdout.write(text)
        return 0
    if cmd == "sweep":
        if args.points < 2 or not args.v_max > 0 or not math.isfinite(args.v_max):
            raise UsageError("sbmbp sweep: error: need --points >= 2 and a finite --v-max > 0")
        _emit(sweep(config, v_max=args.v_max, points=args.points), args.format, out)
        return 0
    runner = {"graph-sim": run_graph_experiment, "tree-sim": run_tree_experiment,
              "symmetric-sim": run_symmetric_experiment, "alpha": run_alpha_experiment}[cmd]
    _emit(runner(config), args.format, out)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
        sub = parser.subcommands[args.command]
        if extra:
            sub.error(f"unrecognized arguments: {' '.join(extra)}")
        try:
            config = _resolve(args)
        except UsageError as err:
            raise UsageError(f"{sub.format_usage()}{err}") from err
        print("config: " + config.to_json(), file=sys.stderr)
        try:
            return _run(args, config)
        except UsageError:
            raise
        except (ValueError, RuntimeError, ArithmeticError, MemoryError, OSError) as err:
            print(f"sbmbp {args.command}: {type(err).__name__}: {err}", file=sys.stderr)
            return 2
    except UsageError as err:
        print(str(err), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
