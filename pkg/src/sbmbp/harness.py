"""Monte Carlo experiment drivers and report writers.

Every experiment returns a :class:`Report`: a list of CSV rows (one per
trial and depth) plus a JSON summary with aggregates, predictions and a
pass/fail verdict under the tolerance policy
``|empirical - predicted| <= max(abs_floor, k_sigma * stderr)``.

Seeds: trial ``i`` of an experiment of kind ``K`` uses
``derive_seed(master, K, i)`` (see :mod:`sbmbp.rng`), and each row records
it, so any row can be re-run alone.  Wall-clock fields live under the
``"timing"`` key of the summary and are the only non-deterministic output.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .density_evolution import (
    ConvergenceError,
    Kind,
    fixed_points,
    predicted_misclassification,
    q_function,
    scan_fixed_points,
    trajectory,
)
from .graph_bp import (
    RecoveryUninformative,
    algorithm2,
    bp_beliefs_by_round,
    decide,
    misclassified_fraction,
)
from .model import ModelParams, params_from_rates, sample_sbm
from .rng import derive_seed
from .spectral_init import RecoveryError, estimate_alpha
from .tree_bp import estimate_tree_errors, gaussian_ks_distance

__all__ = [
    "ExperimentConfig",
    "Report",
    "run_graph_experiment",
    "run_tree_experiment",
    "run_symmetric_experiment",
    "run_alpha_experiment",
    "sweep",
    "tolerance",
    "FIG1_RHOS",
]

# counter namespaces for derive_seed(master, KIND, trial)
GRAPH, TREE, SYMMETRIC, ALPHA = 1, 2, 3, 4

FIG1_RHOS = (0.5, 0.3, 0.2, 0.1, 0.05)
FIG2_CASES = ((0.01, 50.0, 0.0), (0.01, 40.0, 1.5))

GRAPH_COLUMNS = ["trial", "seed", "n", "rho", "b", "mu", "nu", "t", "misclassified_plain",
                 "misclassified_flipmin", "predicted_vt", "prediction"]
SWEEP_COLUMNS = ["rho", "mu", "nu", "v", "h", "h_prime", "map_value"]


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one experiment.

    ``a`` / ``c`` override ``mu`` / ``nu`` when given.  ``b_list`` is used by
    tree experiments (defaults to ``[b]``); ``alphas`` are the noisy-boundary
    levels.  ``accounting`` picks the column used for pass/fail
    (``plain`` or ``flip``).
    """

    n: int = 100_000
    rho: float = 0.5
    b: float = 16.0
    mu: float = 4.0
    nu: float = 0.0
    a: float | None = None
    c: float | None = None
    t_list: list[int] = field(default_factory=lambda: [1, 2, 3, 4])
    trials: int = 10
    seed: int = 0
    accounting: str = "plain"
    include_reserved: bool = True
    abs_floor: float = 0.02
    k_sigma: float = 3.0
    b_list: list[float] | None = None
    alphas: list[float] = field(default_factory=list)
    mode: str = "fast"
    recovery: str = "lanczos"
    threads: int = 1
    out: str | None = None

    def __post_init__(self):
        self.t_list = [int(t) for t in self.t_list]
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.t_list:
            raise ValueError("t_list must be nonempty")
        if min(self.t_list) < 0:
            raise ValueError("depths must be >= 0")
        if self.accounting not in ("plain", "flip"):
            raise ValueError(f"accounting must be 'plain' or 'flip', got {self.accounting!r}")
        if self.mode not in ("fast", "faithful"):
            raise ValueError(f"mode must be 'fast' or 'faithful', got {self.mode!r}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def params(self, b: float | None = None) -> ModelParams:
        b = self.b if b is None else b
        if self.a is not None or self.c is not None:
            sb = math.sqrt(b)
            a = self.a if self.a is not None else b + self.mu * sb
            c = self.c if self.c is not None else b + self.nu * sb
            return params_from_rates(self.n, self.rho, a, b, c)
        return ModelParams(self.n, self.rho, b, self.mu, self.nu)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))


def tolerance(stderr: float, config: ExperimentConfig) -> float:
    return max(config.abs_floor, config.k_sigma * stderr)


def _mean_se(values) -> tuple[float, float]:
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        return float(x.mean()), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def _num(x):
    """Stable JSON/CSV scalar: repr of floats round-trips exactly."""
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


@dataclass
class Report:
    kind: str
    rows: list[dict]
    columns: list[str]
    summary: dict
    timing: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.columns, lineterminator="\n",
                           extrasaction="ignore")
        w.writeheader()
        for row in self.rows:
            w.writerow({k: _num(v) for k, v in row.items()})
        return buf.getvalue()

    def summary_dict(self, with_timing: bool = True) -> dict:
        out = dict(self.summary)
        if with_timing:
            out["timing"] = dict(self.timing)
        return out

    def to_json(self, with_timing: bool = True) -> str:
        return json.dumps(self.summary_dict(with_timing), sort_keys=True, indent=2,
                          default=_num) + "\n"

    @property
    def passed(self) -> bool:
        return bool(self.summary.get("pass", True))

    def write(self, out: str | Path) -> tuple[Path, Path]:
        """Write ``<out>.csv`` and ``<out>.json``; returns both paths."""
        out = Path(out)
        if out.suffix in (".csv", ".json"):
            out = out.with_suffix("")
        out.parent.mkdir(parents=True, exist_ok=True)
        csv_path, json_path = out.with_suffix(".csv"), out.with_suffix(".json")
        self.write_csv(csv_path)
        json_path.write_text(self.to_json())
        return csv_path, json_path

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.to_csv())
        return path


def _header(config: ExperimentConfig, kind: str) -> dict:
    return {"experiment": kind, "version": __version__, "config": config.to_dict()}


def _map(fn, args, threads, on_failure=None):
    """Results in argument order; ``on_failure(done)`` sees the finished ones."""
    done = []
    try:
        if threads <= 1:
            for a in args:
                done.append(fn(*a))
        else:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                for r in pool.map(fn, *zip(*args)):
                    done.append(r)
    except Exception:
        if on_failure is not None:
            on_failure(done)
        raise
    return done


def _flush_partial(config: ExperimentConfig, columns, rows):
    if config.out and rows:
        path = Path(config.out)
        path = path.with_suffix("") if path.suffix in (".csv", ".json") else path
        path.parent.mkdir(parents=True, exist_ok=True)
        Report("partial", rows, columns, {}).write_csv(path.with_suffix(".partial.csv"))


def _nonincreasing(means, ses, k):
    """Each step may rise by at most ``k`` combined standard errors."""
    return all(m1 - m0 <= k * math.hypot(s0, s1)
               for (m0, s0), (m1, s1) in zip(zip(means, ses), zip(means[1:], ses[1:])))


# ---------------------------------------------------------------------------
# Algorithm 1 on sampled graphs


def _graph_trial(params: ModelParams, t_list: list[int], trial: int, seed: int):
    graph = sample_sbm(params, seed)
    wanted = set(t_list)
    out = {}
    for state in bp_beliefs_by_round(graph, params, max(t_list)):
        if state.t in wanted:
            lab = decide(state, params)
            out[state.t] = (misclassified_fraction(lab, graph.sigma, "plain"),
                            misclassified_fraction(lab, graph.sigma, "flip"))
    if 0 in wanted:
        lab = np.where(params.bias >= -params.phi, 1, -1) * np.ones(graph.n, dtype=np.int8)
        out[0] = (misclassified_fraction(lab, graph.sigma, "plain"),
                  misclassified_fraction(lab, graph.sigma, "flip"))
    return trial, seed, out


def run_graph_experiment(config: ExperimentConfig) -> Report:
    """Algorithm 1 (zero-initialised BP) against the Q-mixture at ``v_t``."""
    t0 = time.perf_counter()
    params = config.params()
    t_list = sorted(set(config.t_list))
    tr = trajectory(params, Kind.V, t_max=max(max(t_list), 1))
    vt = {t: tr.at(t) for t in t_list}
    pred = {t: predicted_misclassification(vt[t], params.rho) for t in t_list}
    seeds = [derive_seed(config.seed, GRAPH, i) for i in range(config.trials)]

    def to_rows(results):
        return [{"trial": trial, "seed": seed, "n": params.n, "rho": params.rho,
                 "b": params.b, "mu": params.mu, "nu": params.nu, "t": t,
                 "misclassified_plain": out[t][0], "misclassified_flipmin": out[t][1],
                 "predicted_vt": vt[t], "prediction": pred[t]}
                for trial, seed, out in sorted(results, key=lambda r: r[0]) for t in t_list]

    results = _map(_graph_trial, [(params, t_list, i, s) for i, s in enumerate(seeds)],
                   config.threads,
                   lambda done: _flush_partial(config, GRAPH_COLUMNS, to_rows(done)))
    rows = to_rows(results)
    col = "misclassified_plain" if config.accounting == "plain" else "misclassified_flipmin"
    per_t = []
    for t in t_list:
        plain = _mean_se([r["misclassified_plain"] for r in rows if r["t"] == t])
        flip = _mean_se([r["misclassified_flipmin"] for r in rows if r["t"] == t])
        used = plain if col == "misclassified_plain" else flip
        tol = tolerance(used[1], config)
        per_t.append({
            "t": t, "mean_plain": plain[0], "stderr_plain": plain[1],
            "mean_flipmin": flip[0], "stderr_flipmin": flip[1],
            "predicted_vt": vt[t], "prediction": pred[t], "prediction_kind": "V",
            "deviation": used[0] - pred[t], "tolerance": tol,
            "pass": abs(used[0] - pred[t]) <= tol,
        })
    mono = _nonincreasing([p["mean_" + ("plain" if col.endswith("plain") else "flipmin")]
                           for p in per_t],
                          [p["stderr_" + ("plain" if col.endswith("plain") else "flipmin")]
                           for p in per_t], config.k_sigma)
    summary = _header(config, "graph")
    summary.update({
        "params": params.to_dict(), "accounting": config.accounting, "per_t": per_t,
        "nonincreasing_in_t": mono,
        "pass": all(p["pass"] for p in per_t) and mono,
    })
    return Report("graph", rows, GRAPH_COLUMNS, summary,
                  {"wall_time_s": time.perf_counter() - t0})


# ---------------------------------------------------------------------------
# tree model


TREE_COLUMNS = ["b", "t", "trials", "seed", "p_star", "p_star_se", "q_star", "q_star_se",
                "alpha", "q_tilde", "q_tilde_se", "predicted_vt", "prediction_v",
                "predicted_wt", "prediction_w", "ks_distance"]


def run_tree_experiment(config: ExperimentConfig, ks: bool = True) -> Report:
    """Tree MAP errors per (b, t) and, for t >= 1, Gaussian KS distances.

    Rows: one per (b, t, alpha) with alpha-independent columns repeated; a
    config without alphas gives one row per (b, t) with empty alpha fields.
    Predictions: ``q_star`` against the Q-mixture at ``v_t``, ``p_star``
    against the Q-mixture at ``w_t``.
    """
    t0 = time.perf_counter()
    b_list = config.b_list or [config.b]
    alphas = sorted(float(a) for a in config.alphas)
    rows, cells = [], []
    for bi, b in enumerate(b_list):
        params = config.params(b)
        tmax = max(max(config.t_list), 1)
        v_tr = trajectory(params, Kind.V, t_max=tmax)
        w_tr = trajectory(params, Kind.W, t_max=tmax)
        for t in sorted(set(config.t_list)):
            seed = derive_seed(config.seed, TREE, bi, t)
            rep = estimate_tree_errors(params, t, alphas, config.trials, seed)
            vt = v_tr.at(t)
            wt = w_tr.at(t) if t >= 1 else math.inf
            pv = predicted_misclassification(vt, params.rho)
            pw = (predicted_misclassification(wt, params.rho) if t >= 1 else 0.0)
            ksd = None
            if ks and t >= 1 and vt > 0:
                ksd = gaussian_ks_distance(params, t, config.trials, derive_seed(seed, 1))
            tol_q = tolerance(rep.q_star_se, config)
            tol_p = tolerance(rep.p_star_se, config)
            qt, qs = rep.q_tilde, rep.q_tilde_se
            ok_alpha = all(q0 - q1 <= config.k_sigma * math.hypot(s0, s1)
                           for q0, q1, s0, s1 in zip(qt, qt[1:], qs, qs[1:]))
            cell = {
                "b": b, "t": t, "seed": seed, "report": rep.to_dict(),
                "predicted_vt": vt, "prediction_v": pv,
                "predicted_wt": wt if t >= 1 else None, "prediction_w": pw,
                "q_star_deviation": rep.q_star - pv, "q_star_tolerance": tol_q,
                "q_star_pass": abs(rep.q_star - pv) <= tol_q,
                "p_star_deviation": rep.p_star - pw, "p_star_tolerance": tol_p,
                "p_star_pass": abs(rep.p_star - pw) <= tol_p,
                "q_tilde_nondecreasing": ok_alpha,
                "ks_distance": ksd,
            }
            cells.append(cell)
            base = {"b": b, "t": t, "trials": config.trials, "seed": seed,
                    "p_star": rep.p_star, "p_star_se": rep.p_star_se, "q_star": rep.q_star,
                    "q_star_se": rep.q_star_se, "predicted_vt": vt, "prediction_v": pv,
                    "predicted_wt": cell["predicted_wt"], "prediction_w": pw,
                    "ks_distance": ksd}
            if alphas:
                for a, q, s in zip(alphas, qt, qs):
                    rows.append({**base, "alpha": a, "q_tilde": q, "q_tilde_se": s})
            else:
                rows.append({**base, "alpha": None, "q_tilde": None, "q_tilde_se": None})
    ks_by_t = {}
    for c in cells:
        if c["ks_distance"] is not None:
            ks_by_t.setdefault(c["t"], []).append(c["ks_distance"])
    ks_decreasing = {str(t): all(x > y for x, y in zip(v, v[1:])) for t, v in ks_by_t.items()}
    summary = _header(config, "tree")
    summary.update({"cells": cells, "ks_decreasing_in_b": ks_decreasing,
                    "pass": all(c["q_tilde_nondecreasing"] for c in cells)})
    return Report("tree", rows, TREE_COLUMNS, summary, {"wall_time_s": time.perf_counter() - t0})


# ---------------------------------------------------------------------------
# Algorithm 2, symmetric model

SYMMETRIC_COLUMNS = ["trial", "seed", "n", "rho", "b", "mu", "nu", "t", "outcome",
                     "alpha_hat", "misclassified_flipmin", "misclassified_flipmin_excl_u",
                     "misclassified_plain", "prediction", "u_limit"]


def _symmetric_trial(params, t_list, mode, recovery_name, trial, seed):
    from functools import partial

    from .spectral_init import correlated_recovery

    recovery = partial(correlated_recovery, method=recovery_name)
    graph = sample_sbm(params, derive_seed(seed, 0))
    try:
        alpha_hat = estimate_alpha(graph, params, recovery, derive_seed(seed, 1)).alpha_hat
    except (RecoveryError, RuntimeError) as err:
        return trial, seed, {t: ("alpha-failed: " + str(err), None, None) for t in t_list}
    out = {}
    for t in t_list:
        try:
            res = algorithm2(graph, params, t, recovery, mode, derive_seed(seed, 2),
                             alpha_hat=alpha_hat)
        except RecoveryUninformative as err:
            out[t] = ("uninformative: " + str(err), alpha_hat, None)
            continue
        except RecoveryError as err:
            out[t] = ("recovery-failed: " + str(err), alpha_hat, None)
            continue
        out[t] = ("ok", alpha_hat, (res.misclassification(graph.sigma, True, "flip"),
                                    res.misclassification(graph.sigma, False, "flip"),
                                    res.misclassification(graph.sigma, True, "plain")))
    return trial, seed, out


def run_symmetric_experiment(config: ExperimentConfig) -> Report:
    """Algorithm 2 against ``Q(sqrt(v_upper))`` in the model ``rho = 1/2, mu = nu``.

    Aborted runs (uninformative recovery) become rows with an outcome
    string and empty error columns.  For every run with an estimate the
    U-trajectory started from it is iterated to its limit and compared with
    ``v_upper``.
    """
    t0 = time.perf_counter()
    params = config.params()
    fp = fixed_points(params)
    pred = q_function(math.sqrt(fp.v_upper))
    seeds = [derive_seed(config.seed, SYMMETRIC, i) for i in range(config.trials)]
    t_list = sorted(set(config.t_list))
    if min(t_list) < 1:
        raise ValueError("Algorithm 2 needs t >= 1")
    results = _map(_symmetric_trial,
                   [(params, t_list, config.mode, config.recovery, i, s)
                    for i, s in enumerate(seeds)], config.threads)
    rows = []
    u_limits = {}
    for trial, seed, out in sorted(results, key=lambda r: r[0]):
        for t in t_list:
            outcome, alpha_hat, errs = out[t]
            u_lim = None
            if alpha_hat is not None and alpha_hat < 0.5:
                if alpha_hat not in u_limits:
                    u_tr = trajectory(params, Kind.U, alpha=alpha_hat, t_max=100_000, tol=1e-13)
                    u_limits[alpha_hat] = u_tr.last
                u_lim = u_limits[alpha_hat]
            rows.append({
                "trial": trial, "seed": seed, "n": params.n, "rho": params.rho, "b": params.b,
                "mu": params.mu, "nu": params.nu, "t": t, "outcome": outcome,
                "alpha_hat": alpha_hat,
                "misclassified_flipmin": errs[0] if errs else None,
                "misclassified_flipmin_excl_u": errs[1] if errs else None,
                "misclassified_plain": errs[2] if errs else None,
                "prediction": pred, "u_limit": u_lim,
            })
    per_t = []
    col = "misclassified_flipmin" if config.include_reserved else "misclassified_flipmin_excl_u"
    for t in t_list:
        ok = [r for r in rows if r["t"] == t and r["outcome"] == "ok"]
        entry = {"t": t, "completed": len(ok), "aborted": config.trials - len(ok),
                 "prediction": pred, "prediction_kind": "Q(sqrt(v_upper))"}
        if ok:
            m, s = _mean_se([r[col] for r in ok])
            m_ex, s_ex = _mean_se([r["misclassified_flipmin_excl_u"] for r in ok])
            entry.update({"mean_flipmin": m, "stderr_flipmin": s, "mean_flipmin_excl_u": m_ex,
                          "stderr_flipmin_excl_u": s_ex, "deviation": m - pred,
                          "pass": abs(m - pred) <= config.abs_floor})
        else:
            entry["pass"] = False
        per_t.append(entry)
    u_dev = [abs(r["u_limit"] - fp.v_upper) for r in rows if r["u_limit"] is not None]
    summary = _header(config, "symmetric")
    summary.update({
        "params": params.to_dict(), "v_upper": fp.v_upper, "per_t": per_t,
        "u_limit_max_deviation": max(u_dev) if u_dev else None,
        "pass": all(p["pass"] for p in per_t),
    })
    return Report("symmetric", rows, SYMMETRIC_COLUMNS, summary,
                  {"wall_time_s": time.perf_counter() - t0})


# ---------------------------------------------------------------------------
# alpha estimation

ALPHA_COLUMNS = ["trial", "seed", "n", "rho", "b", "mu", "nu", "alpha_hat", "alpha_true",
                 "probes"]


def run_alpha_experiment(config: ExperimentConfig) -> Report:
    """Run the estimator on sampled graphs with spectral recovery."""
    from functools import partial

    from .spectral_init import correlated_recovery

    t0 = time.perf_counter()
    params = config.params()
    recovery = partial(correlated_recovery, method=config.recovery)
    rows = []
    for i in range(config.trials):
        seed = derive_seed(config.seed, ALPHA, i)
        graph = sample_sbm(params, derive_seed(seed, 0))
        est = estimate_alpha(graph, params, recovery, derive_seed(seed, 1))
        rows.append({"trial": i, "seed": seed, "n": params.n, "rho": params.rho,
                     "b": params.b, "mu": params.mu, "nu": params.nu,
                     "alpha_hat": est.alpha_hat, "alpha_true": est.alpha_true,
                     "probes": len(est.probes)})
    summary = _header(config, "alpha")
    m, s = _mean_se([r["alpha_hat"] for r in rows])
    mt, st = _mean_se([r["alpha_true"] for r in rows])
    summary.update({"params": params.to_dict(), "mean_alpha_hat": m, "stderr_alpha_hat": s,
                    "mean_alpha_true": mt, "stderr_alpha_true": st})
    return Report("alpha", rows, ALPHA_COLUMNS, summary, {"wall_time_s": time.perf_counter() - t0})


# ---------------------------------------------------------------------------
# curves


def sweep(config: ExperimentConfig | None = None, v_max: float = 6.0, points: int = 121,
          cases=None, fig2_v_max: float = 10.0) -> Report:
    """h' curves (``mu = nu = 0`` rows, one per rho) and map curves with roots.

    ``cases`` lists ``(rho, mu, nu)`` for the map curves; by default the two
    small-rho settings with three fixed points.  A config, when given, adds
    its own ``(rho, mu, nu)`` as a further map curve.
    """
    t0 = time.perf_counter()
    n, b = (config.n, config.b) if config else (10**6, 100.0)
    cases = list(FIG2_CASES if cases is None else cases)
    if config is not None and (config.rho, config.mu, config.nu) not in cases:
        cases.append((config.rho, config.mu, config.nu))
    rows = []
    grid1 = np.linspace(0.0, v_max, points)
    for rho in FIG1_RHOS:
        (res,) = scan_fixed_points([ModelParams(n, rho, b, 0.0, 0.0)], grid1)
        rows += _curve_rows(res)
    grid2 = np.linspace(0.0, fig2_v_max, 4 * points + 1)
    roots = []
    for rho, mu, nu in cases:
        b_case = max(b, ((abs(mu) + abs(nu)) ** 2))  # keep a, c within rate limits
        p = ModelParams(max(n, int(4 * b_case)), rho, b_case, mu, nu)
        (res,) = scan_fixed_points([p], grid2)
        rows += _curve_rows(res)
        roots.append({"rho": rho, "mu": mu, "nu": nu, "brackets": [list(x) for x in res.brackets],
                      "roots": res.roots})
    summary = {"experiment": "sweep", "version": __version__,
               "config": config.to_dict() if config else None, "fixed_points": roots}
    return Report("sweep", rows, SWEEP_COLUMNS, summary, {"wall_time_s": time.perf_counter() - t0})


def _curve_rows(res):
    p = res.params
    return [{"rho": p.rho, "mu": p.mu, "nu": p.nu, "v": v, "h": hv, "h_prime": hp,
             "map_value": mv}
            for v, hv, hp, mv in zip(res.v, res.h, res.h_prime, res.map_value)]


def de_report(params: ModelParams, alpha: float | None = None, t_max: int = 10) -> dict:
    """Fixed points, trajectories and predictions for one parameter set."""
    out = {"params": params.to_dict()}
    try:
        fp = fixed_points(params)
        out["fixed_points"] = fp.to_dict()
        out["prediction_v_lower"] = predicted_misclassification(fp.v_lower, params.rho)
        out["prediction_v_upper"] = predicted_misclassification(fp.v_upper, params.rho)
        out["q_sqrt_v_upper"] = q_function(math.sqrt(fp.v_upper))
    except ConvergenceError as err:
        out["fixed_points"] = {"error": str(err)}
    v = trajectory(params, Kind.V, t_max=t_max, tol=0.0)
    w = trajectory(params, Kind.W, t_max=t_max - 1, tol=0.0)
    out["v_trajectory"] = v.values
    out["w_trajectory"] = w.values
    out["v_predictions"] = [predicted_misclassification(x, params.rho) for x in v.values]
    if alpha is not None:
        u = trajectory(params, Kind.U, alpha=alpha, t_max=t_max - 1, tol=0.0)
        out["alpha"] = alpha
        out["u_trajectory"] = u.values
    return out
