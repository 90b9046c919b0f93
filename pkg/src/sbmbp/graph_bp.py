"""Belief propagation on sampled graphs.

Messages live on CSR slots: slot ``e`` in row ``i`` holds the message sent
*to* ``i`` by ``indices[e]``.  One synchronous round computes every vertex's
belief sum once and obtains each outgoing message by subtracting the
contribution of its recipient, so a round costs O(m).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import LabeledGraph, ModelParams
from .rng import SeedLike, child_seed, make_rng

__all__ = [
    "MessageInit",
    "MessageState",
    "RecoveryUninformative",
    "Algorithm2Result",
    "f_transfer",
    "bp_run",
    "bp_beliefs_by_round",
    "decide",
    "degree_threshold_decision",
    "misclassified_fraction",
    "algorithm2",
]


def f_transfer(x, params: ModelParams):
    """``F(x) = 1/2 log((e^{2x} rho a + (1-rho) b) / (e^{2x} rho b + (1-rho) c))``.

    Evaluated with ``logaddexp`` so large ``|x|`` never overflows;
    ``F(+inf) = 1/2 log(a/b)`` and ``F(-inf) = 1/2 log(b/c)``.
    """
    x = np.asarray(x, dtype=float)
    r, rb = params.rho, 1.0 - params.rho
    with np.errstate(divide="ignore"):
        la, lb, lc = np.log(params.a), np.log(params.b), np.log(params.c)
        lr, lrb = math.log(r), math.log(rb)
        two_x = 2.0 * np.where(np.isinf(x), 0.0, x)
        out = 0.5 * (np.logaddexp(two_x + lr + la, lrb + lb)
                     - np.logaddexp(two_x + lr + lb, lrb + lc))
        out = np.where(x == np.inf, 0.5 * (la - lb), out)
        out = np.where(x == -np.inf, 0.5 * (lb - lc), out)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MessageInit:
    """Initial messages: all zero, or ``+-1/2 log((1-alpha)/alpha)`` by label.

    With labels, vertex ``i`` sends ``labels[i] * g`` on every edge; a label
    of 0 sends 0.
    """

    labels: np.ndarray | None = None
    alpha: float | None = None

    @classmethod
    def zero(cls) -> "MessageInit":
        return cls()

    @classmethod
    def from_labels(cls, labels, alpha: float) -> "MessageInit":
        if not 0.0 < alpha < 0.5:
            raise ValueError(f"alpha must lie in (0, 1/2), got {alpha!r}")
        return cls(np.asarray(labels, dtype=np.int8), float(alpha))

    @property
    def strength(self) -> float:
        return 0.0 if self.labels is None else 0.5 * math.log((1 - self.alpha) / self.alpha)

    def messages(self, graph: LabeledGraph) -> np.ndarray:
        if self.labels is None:
            return np.zeros(graph.indices.size)
        if self.labels.shape != (graph.n,):
            raise ValueError("initial labels must have one entry per vertex")
        return self.strength * self.labels[graph.indices].astype(float)


@dataclass
class MessageState:
    messages: np.ndarray  # per CSR slot: message into the row vertex
    beliefs: np.ndarray
    t: int


def _reverse_slots(graph: LabeledGraph, rows: np.ndarray) -> np.ndarray:
    n = graph.n
    keys = rows * n + graph.indices
    return np.searchsorted(keys, graph.indices * n + rows)


def bp_beliefs_by_round(graph: LabeledGraph, params: ModelParams, t_max: int,
                        init: MessageInit | None = None):
    """Yield ``MessageState`` for ``t = 1 .. t_max`` (synchronous updates)."""
    if t_max < 1:
        raise ValueError("t must be >= 1")
    init = init or MessageInit.zero()
    rows = graph.rows()
    rev = _reverse_slots(graph, rows)
    msg = init.messages(graph)
    bias = params.bias
    n = graph.n
    for t in range(1, t_max + 1):
        fm = f_transfer(msg, params)
        beliefs = bias + np.bincount(rows, weights=fm, minlength=n)
        yield MessageState(msg, beliefs, t)
        if t < t_max:
            new = np.empty_like(msg)
            new[rev] = beliefs[rows] - fm
            msg = new


def bp_run(graph: LabeledGraph, params: ModelParams, t: int,
           init: MessageInit | None = None) -> MessageState:
    """``t - 1`` message rounds followed by one belief round."""
    if t < 1:
        raise ValueError("t must be >= 1")
    state = None
    for state in bp_beliefs_by_round(graph, params, t, init):
        pass
    return state


def decide(state_or_beliefs, params: ModelParams) -> np.ndarray:
    """MAP labels: +1 where the belief is at least ``-phi`` (ties to +1)."""
    beliefs = getattr(state_or_beliefs, "beliefs", state_or_beliefs)
    return np.where(np.asarray(beliefs) >= -params.phi, 1, -1).astype(np.int8)


def degree_threshold_decision(graph: LabeledGraph, params: ModelParams) -> np.ndarray:
    """Labels from thresholding the degree, as one zero-initialised BP round does.

    The first belief is ``bias + deg * F(0)``, so the vertex is labelled +1
    iff the degree is on the ``sign(F(0))`` side of ``(-phi - bias) / F(0)``.
    """
    f0 = f_transfer(0.0, params)
    deg = graph.degrees
    if f0 == 0.0:
        lab = np.full(graph.n, 1 if params.bias >= -params.phi else -1)
    else:
        thr = (-params.phi - params.bias) / f0
        lab = np.where(deg >= thr, 1, -1) if f0 > 0 else np.where(deg <= thr, 1, -1)
    return lab.astype(np.int8)


def misclassified_fraction(labels, truth, mode: str = "plain") -> float:
    """Fraction of disagreeing entries; ``mode="flip"`` minimises over a global sign."""
    labels = np.asarray(labels)
    truth = np.asarray(truth)
    if labels.shape != truth.shape:
        raise ValueError("labelings must have equal length")
    if labels.size == 0:
        return 0.0
    plain = float(np.mean(labels != truth))
    if mode == "plain":
        return plain
    if mode in ("flip", "flip-minimized"):
        return min(plain, float(np.mean(-labels != truth)))
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# BP warm-started from a correlated partition


class RecoveryUninformative(RuntimeError):
    """The correlated partition carries (almost) no information."""


@dataclass
class Algorithm2Result:
    labels: np.ndarray
    reserved: np.ndarray  # boolean mask of the random set U
    anchor: int
    alpha_hat: float
    mode: str
    probes: np.ndarray | None = None  # faithful mode: evaluated vertices

    def misclassification(self, truth, include_reserved: bool = True,
                          mode: str = "flip") -> float:
        keep = np.ones(truth.size, dtype=bool) if include_reserved else ~self.reserved
        if self.probes is not None:
            keep = np.zeros(truth.size, dtype=bool)
            keep[self.probes] = True
        return misclassified_fraction(self.labels[keep], np.asarray(truth)[keep], mode)


ALPHA_FLOOR = 1e-3
UNINFORMATIVE_MARGIN = 1e-3


def _ball(graph: LabeledGraph, root: int, radius: int) -> np.ndarray:
    """Vertices within graph distance ``radius`` of ``root``."""
    seen = np.zeros(graph.n, dtype=bool)
    seen[root] = True
    frontier = np.array([root])
    for _ in range(radius):
        if frontier.size == 0:
            break
        nb = np.concatenate([graph.neighbors(v) for v in frontier])
        nb = np.unique(nb[~seen[nb]])
        seen[nb] = True
        frontier = nb
    return seen


def algorithm2(graph: LabeledGraph, params: ModelParams, t: int,
               recovery: Callable | None = None, mode: str = "fast",
               seed: SeedLike = 0, probes: int = 50,
               alpha_hat: float | None = None) -> Algorithm2Result:
    """Local BP warm-started from a correlated-recovery partition.

    fast: one recovery run on the graph minus the reserved set U, oriented by
    the anchor vertex, then BP from ``MessageInit.from_labels``.

    faithful: for each of ``probes`` random vertices u outside U, rerun the
    recovery on the graph minus U and the radius ``t-1`` ball around u, orient
    it with the anchor, and run BP from that partition; only the probe labels
    are produced (all other entries are 0).

    Vertices in U get uniformly random labels.  ``alpha_hat`` defaults to
    :func:`sbmbp.spectral_init.estimate_alpha`.
    """
    from . import spectral_init

    if t < 1:
        raise ValueError("t must be >= 1")
    if mode not in ("fast", "faithful"):
        raise ValueError(f"unknown mode {mode!r}")
    recovery = recovery or spectral_init.correlated_recovery
    rng = make_rng(seed)
    n = graph.n
    reserved = np.zeros(n, dtype=bool)
    reserved[rng.choice(n, size=math.isqrt(n), replace=False)] = True
    anchor = spectral_init.pick_anchor(graph, reserved, ~reserved)

    if alpha_hat is None:
        alpha_hat = spectral_init.estimate_alpha(graph, params, recovery, child_seed(rng)).alpha_hat
    if alpha_hat >= 0.5 - UNINFORMATIVE_MARGIN:
        raise RecoveryUninformative(f"estimated partition error {alpha_hat:.4f} is ~1/2")
    alpha_used = max(alpha_hat, ALPHA_FLOOR)

    labels = np.zeros(n, dtype=np.int8)
    if mode == "fast":
        part = spectral_init.recover_on(graph, params, ~reserved, recovery, child_seed(rng))
        part = spectral_init.orient(part, anchor, graph, params)
        state = bp_run(graph, params, t, MessageInit.from_labels(part, alpha_used))
        labels[:] = decide(state, params)
        probe_ids = None
    else:
        pool = np.flatnonzero(~reserved)
        probe_ids = np.sort(rng.choice(pool, size=min(probes, pool.size), replace=False))
        for u in probe_ids:
            keep = ~reserved & ~_ball(graph, int(u), t - 1)
            part = spectral_init.recover_on(graph, params, keep, recovery, child_seed(rng))
            part = spectral_init.orient(part, anchor, graph, params)
            state = bp_run(graph, params, t, MessageInit.from_labels(part, alpha_used))
            labels[u] = 1 if state.beliefs[u] >= -params.phi else -1
    labels[reserved] = np.where(rng.random(int(reserved.sum())) < 0.5, 1, -1)
    return Algorithm2Result(labels, reserved, anchor, float(alpha_hat), mode, probe_ids)
