"""Exact likelihood ratios on two-type Poisson Galton-Watson trees.

Three boundary regimes for the root's depth-t observation:

* ``exact``  - boundary labels revealed (level-0 value +-inf),
* ``hidden`` - boundary labels unobserved (level-0 value 0),
* ``noisy``  - each boundary label flipped with probability alpha
  (level-0 value +-1/2 log((1-alpha)/alpha)).

All regimes share the update ``x_i = (d_minus - d_plus)/2 + sum_children F(x_j)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .density_evolution import Kind, trajectory
from .graph_bp import f_transfer
from .model import GWTree, LabeledGraph, ModelParams, offspring_means
from .rng import derive_seed, make_rng

__all__ = [
    "TreeBeliefs",
    "TreeErrorReport",
    "exact_llr",
    "tree_beliefs",
    "brute_force_llr",
    "hidden_llr_on_graph",
    "simulate_root_llrs",
    "estimate_tree_errors",
    "change_of_measure_check",
    "gaussian_ks_distance",
]

REGIMES = ("exact", "hidden", "noisy")
BRUTE_FORCE_CAP = 20


def _regime(regime, alpha):
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    if regime == "noisy":
        if alpha is None or not 0.0 <= alpha <= 0.5:
            raise ValueError(f"noisy regime needs alpha in [0, 1/2], got {alpha!r}")
        if alpha == 0.0:
            return "exact", None
    return regime, alpha


def _noise_strength(alpha):
    return 0.5 * math.log((1.0 - alpha) / alpha)


@dataclass
class TreeBeliefs:
    """Per-node values; node at depth d holds its level ``t - d`` value."""

    values: np.ndarray
    t: int
    regime: str

    @property
    def root(self) -> float:
        return float(self.values[0])


def tree_beliefs(tree: GWTree, params: ModelParams, t: int, regime: str = "hidden",
                 alpha: float | None = None) -> TreeBeliefs:
    if t < 0:
        raise ValueError("t must be >= 0")
    if tree.max_depth < t:
        raise ValueError(f"tree depth {tree.max_depth} is smaller than t={t}")
    regime, alpha = _regime(regime, alpha)
    keep = tree.depth <= t
    values = np.full(tree.size, np.nan)
    boundary = np.flatnonzero(tree.depth == t)
    if regime == "hidden":
        values[boundary] = 0.0
    elif regime == "exact":
        values[boundary] = np.where(tree.tau[boundary] > 0, np.inf, -np.inf)
    else:
        if tree.tau_tilde is None:
            raise ValueError("noisy regime needs tau_tilde")
        values[boundary] = _noise_strength(alpha) * tree.tau_tilde[boundary]
    bias = params.bias
    for s in range(t - 1, -1, -1):
        nodes = np.flatnonzero(tree.depth == s)
        kids = np.flatnonzero(tree.depth == s + 1)
        acc = np.bincount(tree.parent[kids], weights=f_transfer(values[kids], params),
                          minlength=tree.size)
        values[nodes] = bias + acc[nodes]
    values[~keep] = np.nan
    return TreeBeliefs(values, t, regime)


def exact_llr(tree: GWTree, params: ModelParams, t: int, regime: str = "hidden",
              alpha: float | None = None) -> float:
    """Root log-likelihood ratio (halved) of the depth-``t`` observation."""
    return tree_beliefs(tree, params, t, regime, alpha).root


def brute_force_llr(tree: GWTree, params: ModelParams, t: int, regime: str = "hidden",
                    alpha: float | None = None) -> float:
    """Halved root LLR by summing the joint likelihood over hidden labels.

    The observation is the shape of the depth-``t`` tree plus, depending on
    the regime, the exact or flipped boundary labels.  A node at depth < t
    with label s and k children contributes
    ``exp(-d_s) / k! * prod_children r(s, child label)`` where ``r(+,+) = rho a``,
    ``r(+,-) = (1-rho) b``, ``r(-,+) = rho b``, ``r(-,-) = (1-rho) c``.
    """
    if tree.max_depth < t:
        raise ValueError(f"tree depth {tree.max_depth} is smaller than t={t}")
    regime, alpha = _regime(regime, alpha)
    if regime == "noisy" and tree.tau_tilde is None:
        raise ValueError("noisy regime needs tau_tilde")
    nodes = np.flatnonzero(tree.depth <= t)
    boundary = set(np.flatnonzero(tree.depth == t).tolist())
    if t == 0:
        boundary = {0}
    fixed = {}
    if regime == "exact":
        fixed = {int(i): int(tree.tau[i]) for i in boundary}
    free = [int(i) for i in nodes if i != 0 and int(i) not in fixed]
    if len(free) > BRUTE_FORCE_CAP:
        raise ValueError(f"{len(free)} hidden labels exceed the enumeration cap")
    r, rb = params.rho, 1.0 - params.rho
    log_rate = {(1, 1): math.log(r * params.a), (1, -1): math.log(rb * params.b),
                (-1, 1): math.log(r * params.b), (-1, -1): math.log(rb * params.c)}
    degree = {1: params.d_plus, -1: params.d_minus}
    internal = [int(i) for i in nodes if tree.depth[i] < t]
    if regime == "noisy":
        la, l1a = (math.log(alpha), math.log(1 - alpha))

    def loglik(root):
        if t == 0 and regime == "exact":
            return 0.0 if root == tree.tau[0] else -math.inf
        terms = []
        for bits in itertools.product((1, -1), repeat=len(free)):
            lab = dict(fixed)
            lab.update(zip(free, bits))
            lab[0] = root
            s = 0.0
            for i in internal:
                kids = tree.children(i)
                s += -degree[lab[i]] - math.log(math.factorial(len(kids)))
                s += sum(log_rate[(lab[i], lab[int(j)])] for j in kids)
            if regime == "noisy":
                s += sum(l1a if lab[j] == tree.tau_tilde[j] else la for j in boundary)
            terms.append(s)
        return float(np.logaddexp.reduce(terms))

    lp, lm = loglik(1), loglik(-1)
    if math.isinf(lp) or math.isinf(lm):
        return math.inf if lm == -math.inf else -math.inf
    return 0.5 * (lp - lm)


def hidden_llr_on_graph(graph: LabeledGraph, root: int, t: int, params: ModelParams) -> float:
    """Hidden-boundary recursion on an acyclic graph rooted at ``root``."""
    bias = params.bias

    def rec(v, parent, level):
        if level == 0:
            return 0.0
        total = bias
        for w in graph.neighbors(v):
            if w != parent:
                total += f_transfer(rec(int(w), v, level - 1), params)
        return total

    return rec(int(root), -1, t)


# ---------------------------------------------------------------------------
# Monte Carlo over forests

_BATCH_NODES = 2_000_000


@dataclass
class RootSamples:
    tau: np.ndarray
    hidden: np.ndarray
    exact: np.ndarray
    noisy: np.ndarray  # (trials, len(alphas))
    alphas: tuple


def _level_one(rng, params, lab, alphas):
    """Values at the last internal level from boundary child counts."""
    means = offspring_means(params)
    row = (lab < 0).astype(np.int64)
    n_plus = rng.poisson(means[row, 0])
    n_minus = rng.poisson(means[row, 1])
    bias = params.bias
    f0 = f_transfer(0.0, params)
    fp, fm = f_transfer(np.inf, params), f_transfer(-np.inf, params)
    hidden = bias + (n_plus + n_minus) * f0
    exact = bias + n_plus * fp + n_minus * fm
    noisy = np.empty((lab.size, len(alphas)))
    flip_p = np.zeros(lab.size, dtype=np.int64)  # flipped plus children
    flip_m = np.zeros(lab.size, dtype=np.int64)
    prev = 0.0
    for k, a in enumerate(alphas):
        if a == 0.0:
            noisy[:, k] = exact
            continue
        q = (a - prev) / (1.0 - prev)
        flip_p += rng.binomial(n_plus - flip_p, q)
        flip_m += rng.binomial(n_minus - flip_m, q)
        prev = a
        g = _noise_strength(a)
        tilde_plus = n_plus - flip_p + flip_m
        tilde_minus = n_minus - flip_m + flip_p
        noisy[:, k] = (bias + tilde_plus * f_transfer(g, params)
                       + tilde_minus * f_transfer(-g, params))
    return hidden, exact, noisy


def _forest_batch(rng, params, t, roots, alphas):
    means = offspring_means(params)
    labels = [roots]
    parents = []
    for _ in range(t - 1):
        lab = labels[-1]
        row = (lab < 0).astype(np.int64)
        n_plus = rng.poisson(means[row, 0])
        n_minus = rng.poisson(means[row, 1])
        k = n_plus + n_minus
        ids = np.repeat(np.arange(lab.size), k)
        first = np.repeat(np.cumsum(k) - k, k)
        rank = np.arange(ids.size) - first
        labels.append(np.where(rank < np.repeat(n_plus, k), 1, -1).astype(np.int8))
        parents.append(ids)
    hidden, exact, noisy = _level_one(rng, params, labels[-1], alphas)
    bias = params.bias
    for par, lab_up in zip(reversed(parents), reversed(labels[:-1])):
        size = lab_up.size
        hidden = bias + np.bincount(par, f_transfer(hidden, params), minlength=size)
        exact = bias + np.bincount(par, f_transfer(exact, params), minlength=size)
        fn = f_transfer(noisy, params)
        cols = [np.bincount(par, fn[:, k], minlength=size) for k in range(len(alphas))]
        noisy = bias + (np.stack(cols, axis=1) if cols else np.empty((size, 0)))
    return hidden, exact, noisy


def simulate_root_llrs(params: ModelParams, t: int, trials: int, seed: int,
                       root_label: int | None = None, alphas=()) -> RootSamples:
    """Root values of ``trials`` independent depth-``t`` trees, all regimes.

    Trees are generated level by level in batches; the boundary level is
    never materialized because a level-1 value only depends on the numbers
    of plus/minus children (and of flipped ones, for the noisy regime).
    Noisy labels for increasing alphas are coupled by successive thinning.
    Batch ``k`` draws from ``derive_seed(seed, k)``.
    """
    if t < 0 or trials < 1:
        raise ValueError("need t >= 0 and trials >= 1")
    alphas = tuple(float(a) for a in alphas)
    if any(not 0.0 <= a <= 0.5 for a in alphas) or list(alphas) != sorted(alphas):
        raise ValueError("alphas must be sorted and lie in [0, 1/2]")
    per_tree = max(1.0, 1.0 + max(params.d_plus, params.d_minus)) ** max(t - 1, 0)
    batch = int(max(1, min(trials, _BATCH_NODES // per_tree)))
    taus, hs, es, ns = [], [], [], []
    for k, start in enumerate(range(0, trials, batch)):
        rng = make_rng(derive_seed(seed, k))
        size = min(batch, trials - start)
        if root_label is None:
            roots = np.where(rng.random(size) < params.rho, 1, -1).astype(np.int8)
        else:
            roots = np.full(size, int(root_label), dtype=np.int8)
        if t == 0:
            hidden = np.zeros(size)
            exact = np.where(roots > 0, np.inf, -np.inf)
            noisy = np.empty((size, len(alphas)))
            for j, a in enumerate(alphas):
                flip = rng.random(size) < a
                noisy[:, j] = exact if a == 0.0 else (
                    _noise_strength(a) * np.where(flip, -roots, roots))
        else:
            hidden, exact, noisy = _forest_batch(rng, params, t, roots, alphas)
        taus.append(roots)
        hs.append(hidden)
        es.append(exact)
        ns.append(noisy)
    return RootSamples(np.concatenate(taus), np.concatenate(hs), np.concatenate(es),
                       np.concatenate(ns, axis=0), alphas)


def _error_rate(values, tau, phi):
    wrong = np.where(values >= -phi, 1, -1) != tau
    p = float(np.mean(wrong))
    return p, math.sqrt(p * (1.0 - p) / wrong.size)


@dataclass
class TreeErrorReport:
    """MAP error probabilities on depth-``t`` trees with standard errors."""

    t: int
    trials: int
    p_star: float
    p_star_se: float
    q_star: float
    q_star_se: float
    alphas: tuple = ()
    q_tilde: list = field(default_factory=list)
    q_tilde_se: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "t": self.t, "trials": self.trials,
            "p_star": self.p_star, "p_star_se": self.p_star_se,
            "q_star": self.q_star, "q_star_se": self.q_star_se,
            "alphas": list(self.alphas), "q_tilde": list(self.q_tilde),
            "q_tilde_se": list(self.q_tilde_se),
        }


def estimate_tree_errors(params: ModelParams, t: int, alpha=(), trials: int = 10_000,
                         seed: int = 0) -> TreeErrorReport:
    """Monte Carlo MAP error ``rho P(err | +) + (1-rho) P(err | -)`` per regime.

    Root labels are drawn with ``P(+) = rho``, so the plain error frequency
    is an unbiased estimate of the mixture.  ``alpha`` may be a single value
    or a sorted sequence; noisy-regime results come back in that order.
    """
    alphas = (alpha,) if np.ndim(alpha) == 0 else tuple(alpha)
    s = simulate_root_llrs(params, t, trials, seed, None, alphas)
    phi = params.phi
    p, p_se = _error_rate(s.exact, s.tau, phi)
    q, q_se = _error_rate(s.hidden, s.tau, phi)
    qt = [_error_rate(s.noisy[:, k], s.tau, phi) for k in range(len(alphas))]
    return TreeErrorReport(t, trials, p, p_se, q, q_se, alphas,
                           [x[0] for x in qt], [x[1] for x in qt])


@dataclass
class ChangeOfMeasureReport:
    t: int
    trials: int
    normalization: float  # estimate of E[exp(-2 Gamma) | +], exactly 1 in theory
    normalization_se: float
    minus_side: float  # E[g(Gamma) | -]
    minus_side_se: float
    plus_side: float  # E[g(Gamma) exp(-2 Gamma) | +]
    plus_side_se: float

    @property
    def normalization_z(self) -> float:
        return _z(self.normalization - 1.0, self.normalization_se)

    @property
    def identity_z(self) -> float:
        se = math.hypot(self.minus_side_se, self.plus_side_se)
        return _z(self.minus_side - self.plus_side, se)


def _z(diff, se):
    if se == 0.0:
        return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    return diff / se


def _mean_se(x):
    return float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0


def change_of_measure_check(params: ModelParams, t: int, trials: int, seed: int,
                            g=None) -> ChangeOfMeasureReport:
    """Compare ``E[g(G) | -]`` with ``E[g(G) exp(-2G) | +]`` for the hidden LLR G.

    Also estimates ``E[exp(-2G) | +]``, which equals 1 because ``exp(-2G)``
    is the likelihood ratio of the two root hypotheses.  ``g`` defaults to
    ``tanh(x + phi)``.
    """
    if g is None:
        phi = params.phi
        g = lambda x: np.tanh(x + phi)
    plus = simulate_root_llrs(params, t, trials, derive_seed(seed, 1), root_label=1).hidden
    minus = simulate_root_llrs(params, t, trials, derive_seed(seed, 2), root_label=-1).hidden
    w = np.exp(-2.0 * plus)
    norm, norm_se = _mean_se(w)
    ms, ms_se = _mean_se(g(minus))
    ps, ps_se = _mean_se(g(plus) * w)
    return ChangeOfMeasureReport(t, trials, norm, norm_se, ms, ms_se, ps, ps_se)


def gaussian_ks_distance(params: ModelParams, t: int, trials: int, seed: int,
                         samples: np.ndarray | None = None) -> float:
    """KS distance of ``(G - v_t) / sqrt(v_t)`` given root +, against N(0, 1)."""
    v_t = trajectory(params, Kind.V, t_max=max(t, 1)).at(t)
    if v_t <= 0.0:
        raise ValueError("v_t = 0: the LLR is degenerate")
    if samples is None:
        samples = simulate_root_llrs(params, t, trials, seed, root_label=1).hidden
    z = (samples - v_t) / math.sqrt(v_t)
    return float(stats.kstest(z, "norm").statistic)
