"""Correlated recovery, anchor orientation and partition-error estimation.

The global estimator is spectral: the leading eigenvector of the centered
adjacency operator ``x -> A x - (dbar / n) (1^T x) 1`` with
``dbar = (d_plus + d_minus) / 2``, rounded by sign.  Any callable with the
signature ``recovery(graph, params, seed) -> labels`` can replace it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .model import LabeledGraph, ModelParams
from .rng import SeedLike, child_seed, make_rng

__all__ = [
    "RecoveryError",
    "AlphaEstimationError",
    "CorrelatedInit",
    "correlated_recovery",
    "recover_on",
    "pick_anchor",
    "relabel_by_anchor",
    "orient",
    "estimate_alpha",
]

POWER_BUDGET = 200
RESIDUAL_TOL = 1e-8


class RecoveryError(RuntimeError):
    pass


class AlphaEstimationError(RuntimeError):
    pass


def _adjacency(graph: LabeledGraph) -> sp.csr_matrix:
    data = np.ones(graph.indices.size)
    return sp.csr_matrix((data, graph.indices, graph.indptr), shape=(graph.n, graph.n))


def _centered_operator(graph, params):
    A = _adjacency(graph)
    shift = 0.5 * (params.d_plus + params.d_minus) / params.n

    def mv(x):
        x = np.asarray(x).ravel()
        return A @ x - shift * x.sum()

    return LinearOperator((graph.n, graph.n), matvec=mv, dtype=float)


def _rayleigh_residual(op, x):
    y = op.matvec(x)
    lam = float(x @ y)
    return lam, float(np.linalg.norm(y - lam * x))


def correlated_recovery(graph: LabeledGraph, params: ModelParams, seed: SeedLike = 0,
                        method: str = "lanczos", budget: int = POWER_BUDGET,
                        tol: float = RESIDUAL_TOL) -> np.ndarray:
    """Sign pattern of the top eigenvector of the centered adjacency.

    ``method="lanczos"`` uses ARPACK for the algebraically largest eigenpair;
    ``method="power"`` runs at most ``budget`` power iterations on the
    operator shifted by ``2 sqrt(dbar)`` (which keeps the bottom of the bulk
    spectrum from competing), stopping when the Rayleigh residual is below
    ``tol``.  The start vector is drawn from ``seed``.  Zero entries map to +1.
    """
    n = graph.n
    if n == 0:
        return np.zeros(0, dtype=np.int8)
    if n < 3:
        return np.ones(n, dtype=np.int8)
    rng = make_rng(seed)
    x0 = rng.standard_normal(n)
    op = _centered_operator(graph, params)
    if method == "lanczos":
        try:
            _, vec = eigsh(op, k=1, which="LA", v0=x0, tol=tol, maxiter=50 * n)
        except ArpackNoConvergence as err:
            if err.eigenvectors.shape[1] == 0:
                raise RecoveryError("Lanczos iteration did not converge") from err
            vec = err.eigenvectors
        x = vec[:, 0]
    elif method == "power":
        s = 2.0 * math.sqrt(0.5 * (params.d_plus + params.d_minus) * n / params.n)
        x = x0 / np.linalg.norm(x0)
        res = np.inf
        for _ in range(budget):
            y = op.matvec(x) + s * x
            x = y / np.linalg.norm(y)
            _, res = _rayleigh_residual(op, x)
            if res < tol:
                break
        else:
            if not np.isfinite(res):
                raise RecoveryError("power iteration produced a non-finite vector")
    else:
        raise ValueError(f"unknown method {method!r}")
    x = np.round(x, 14)  # isolated vertices get exact zeros
    return np.where(x >= 0, 1, -1).astype(np.int8)


def power_iteration_residual(graph, params, labels_vector):
    """Rayleigh residual of a unit vector under the centered operator."""
    x = np.asarray(labels_vector, dtype=float)
    x = x / np.linalg.norm(x)
    return _rayleigh_residual(_centered_operator(graph, params), x)


def recover_on(graph: LabeledGraph, params: ModelParams, keep, recovery: Callable,
               seed: SeedLike) -> np.ndarray:
    """Run ``recovery`` on the subgraph induced by ``keep``; 0 elsewhere."""
    sub, ids = graph.induced(keep)
    part = np.asarray(recovery(sub, params, seed), dtype=np.int8)
    if part.shape != (sub.n,):
        raise RecoveryError("recovery returned a labeling of the wrong length")
    full = np.zeros(graph.n, dtype=np.int8)
    full[ids] = part
    if sub.n and (np.all(part > 0) or np.all(part < 0)):
        raise RecoveryError("degenerate partition: every vertex in one cluster")
    return full


def pick_anchor(graph: LabeledGraph, candidates, counted) -> int:
    """Candidate with the most neighbors inside ``counted`` (lowest id on ties)."""
    candidates = np.flatnonzero(np.asarray(candidates, dtype=bool))
    if candidates.size == 0:
        raise RecoveryError("anchor not found: empty candidate set")
    counted = np.asarray(counted, dtype=bool)
    rows = graph.rows()
    deg_in = np.bincount(rows, weights=counted[graph.indices], minlength=graph.n)
    return int(candidates[np.argmax(deg_in[candidates])])


def relabel_by_anchor(partition, anchor: int, graph: LabeledGraph,
                      params: ModelParams) -> np.ndarray:
    """Flip the partition so the anchor's neighborhood fixes the global sign.

    For ``a > b`` the anchor must have at least as many +1 neighbors as -1
    neighbors; for ``a < b`` at least as many -1 neighbors.  Ties keep the
    current orientation.
    """
    partition = np.asarray(partition, dtype=np.int8)
    if params.a == params.b:
        raise ValueError("orientation undefined when a == b")
    if not 0 <= anchor < graph.n:
        raise ValueError(f"anchor {anchor} not in graph")
    nb = partition[graph.neighbors(anchor)]
    plus, minus = int(np.sum(nb > 0)), int(np.sum(nb < 0))
    flip = minus > plus if params.a > params.b else plus > minus
    return -partition if flip else partition.copy()


def orient(partition, anchor, graph, params) -> np.ndarray:
    """:func:`relabel_by_anchor`, or the partition unchanged when ``a == b``.

    With ``a == b`` edges carry no information about the sign, so any
    orientation is as good as another; estimates built on it come out near 1/2.
    """
    if params.a == params.b:
        return np.asarray(partition, dtype=np.int8).copy()
    return relabel_by_anchor(partition, anchor, graph, params)


@dataclass
class CorrelatedInit:
    partition: np.ndarray  # W_u: +1 / -1, 0 on withheld vertices
    anchor: int
    alpha_hat: float
    probes: np.ndarray  # T_1
    alpha_true: float  # misclassification of ``partition`` on its support (diagnostic)


def estimate_alpha(graph: LabeledGraph, params: ModelParams, recovery: Callable | None = None,
                   seed: SeedLike = 0, probe_size: int | None = None,
                   t1_size: int | None = None) -> CorrelatedInit:
    """Estimate the misclassified fraction of a correlated partition.

    Reserved sets: U (``floor(sqrt n)``), S (``floor(n / log b)``), and probe
    set T (``probe_size``, default ``floor(sqrt n)``) drawn from the rest.
    ``W_u`` is the recovery on ``V - U - S``; ``W`` is a second recovery on
    ``V - U - T``; both are oriented by the anchor (the vertex of U with most
    neighbors in ``V - U - S``).  T_1 is the ``t1_size`` (default
    ``ceil(log n)``) members of T with most neighbors in S.  Each probe is
    classified by the majority of its neighbors under W, and the estimate is
    the fraction of probes whose class disagrees with ``W_u``, clamped to
    ``[0, 1/2]``.
    """
    from .graph_bp import misclassified_fraction

    recovery = recovery or correlated_recovery
    rng = make_rng(seed)
    n = graph.n
    idx = rng.permutation(n)
    n_u = math.isqrt(n)
    n_s = int(n / math.log(params.b)) if params.b > 1 else 0
    n_s = min(n_s, n - n_u - 1)
    reserved = np.zeros(n, dtype=bool)
    reserved[idx[:n_u]] = True
    in_s = np.zeros(n, dtype=bool)
    in_s[idx[n_u:n_u + n_s]] = True
    rest = idx[n_u + n_s:]
    m_t = min(probe_size or math.isqrt(n), rest.size)
    in_t = np.zeros(n, dtype=bool)
    in_t[rng.choice(rest, size=m_t, replace=False)] = True

    main = ~reserved & ~in_s
    anchor = pick_anchor(graph, reserved, main)
    w_u = recover_on(graph, params, main, recovery, child_seed(rng))
    w_u = orient(w_u, anchor, graph, params)

    t_ids = np.flatnonzero(in_t)
    s_deg = np.bincount(graph.rows(), weights=in_s[graph.indices], minlength=n)[t_ids]
    k = min(t1_size or math.ceil(math.log(n)), t_ids.size)
    if k == 0:
        raise AlphaEstimationError("no probe vertices available")
    order = np.lexsort((t_ids, -s_deg))
    t1 = t_ids[order[:k]]
    if np.all(s_deg[order[:k]] == 0):
        raise AlphaEstimationError("probe vertices have no neighbors in S")

    w = recover_on(graph, params, ~reserved & ~in_t, recovery, child_seed(rng))
    w = orient(w, anchor, graph, params)
    plus, minus = graph.neighbor_label_counts(w)
    t1_plus = plus[t1] > minus[t1]
    wrong = np.where(t1_plus, w_u[t1] < 0, w_u[t1] > 0)
    alpha_hat = min(max(float(np.mean(wrong)), 0.0), 0.5)
    support = w_u != 0
    alpha_true = misclassified_fraction(w_u[support], graph.sigma[support], "flip")
    return CorrelatedInit(w_u, anchor, alpha_hat, t1, alpha_true)
