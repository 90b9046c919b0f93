"""Two-cluster SBM parameters, graph sampling and two-type Galton-Watson trees.

Parameterization: vertices fall in the first cluster with probability ``rho``;
pairs inside the first cluster connect with probability ``a/n``, inside the
second with ``c/n`` and across with ``b/n``, where ``a = b + mu*sqrt(b)`` and
``c = b + nu*sqrt(b)``.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .rng import SeedLike, make_rng

__all__ = [
    "ModelParams",
    "LabeledGraph",
    "GWTree",
    "TreeSizeError",
    "derive_params",
    "params_from_rates",
    "sample_sbm",
    "sample_gw_tree",
    "attach_noisy_labels",
    "DEFAULT_MAX_TREE_NODES",
    "PAIRWISE_MAX_N",
]

DEFAULT_MAX_TREE_NODES = 10**7
# Below this size every unordered pair gets its own Bernoulli draw.
PAIRWISE_MAX_N = 1000


class TreeSizeError(RuntimeError):
    """Raised when a branching-process sample exceeds its node cap."""


@dataclass(frozen=True)
class ModelParams:
    """Scalar model quantities; derived fields are computed on construction."""

    n: int
    rho: float
    b: float
    mu: float
    nu: float
    a: float = field(init=False)
    c: float = field(init=False)
    phi: float = field(init=False)
    theta: float = field(init=False)
    lam: float = field(init=False)
    d_plus: float = field(init=False)
    d_minus: float = field(init=False)

    def __post_init__(self):
        n, rho, b, mu, nu = self.n, self.rho, self.b, self.mu, self.nu
        if int(n) != n or n < 1:
            raise ValueError(f"n must be a positive integer, got {n!r}")
        if not 0.0 < rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {rho!r}")
        if not b > 0.0:
            raise ValueError(f"b must be positive, got {b!r}")
        sb = math.sqrt(b)
        a = b + mu * sb
        c = b + nu * sb
        if a < 0.0 or c < 0.0:
            raise ValueError(f"negative edge rate: a={a}, c={c}")
        if max(a, b, c) > n:
            raise ValueError(f"edge rates exceed n={n}: a={a}, b={b}, c={c}")
        rb = 1.0 - rho
        set_ = object.__setattr__
        set_(self, "n", int(n))
        set_(self, "a", a)
        set_(self, "c", c)
        set_(self, "phi", 0.5 * math.log(rho / rb))
        set_(self, "theta", rho * (mu - nu) ** 2 / 8.0 + (1.0 - 2.0 * rho) * nu**2 / 4.0)
        set_(self, "lam", rho * (mu + nu) ** 2 / 8.0)
        set_(self, "d_plus", rho * a + rb * b)
        set_(self, "d_minus", rho * b + rb * c)

    @property
    def rho_bar(self) -> float:
        return 1.0 - self.rho

    @property
    def lambda_(self) -> float:
        return self.lam

    @property
    def bias(self) -> float:
        """Constant term ``(d_minus - d_plus) / 2`` of every LLR update."""
        return 0.5 * (self.d_minus - self.d_plus)

    def mirrored(self) -> "ModelParams":
        """Same model with the cluster roles swapped (rho -> 1-rho, mu <-> nu)."""
        return ModelParams(self.n, 1.0 - self.rho, self.b, self.nu, self.mu)

    def replace(self, **changes) -> "ModelParams":
        kw = dict(n=self.n, rho=self.rho, b=self.b, mu=self.mu, nu=self.nu)
        kw.update(changes)
        return ModelParams(**kw)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "rho": self.rho, "b": self.b, "mu": self.mu, "nu": self.nu,
            "a": self.a, "c": self.c, "phi": self.phi, "theta": self.theta,
            "lambda": self.lam, "d_plus": self.d_plus, "d_minus": self.d_minus,
        }


def derive_params(n: int, rho: float, b: float, mu: float, nu: float) -> ModelParams:
    return ModelParams(n, rho, b, mu, nu)


def params_from_rates(n: int, rho: float, a: float, b: float, c: float) -> ModelParams:
    """Build parameters from raw rates ``(a, b, c)`` instead of ``(mu, nu)``."""
    if not b > 0:
        raise ValueError(f"b must be positive, got {b!r}")
    sb = math.sqrt(b)
    return ModelParams(n, rho, b, (a - b) / sb, (c - b) / sb)


# ---------------------------------------------------------------------------
# graphs


@dataclass(frozen=True, eq=False)
class LabeledGraph:
    """Undirected simple graph in CSR form with ground-truth labels.

    ``indices[indptr[i]:indptr[i+1]]`` are the neighbors of ``i`` in
    increasing order.  ``sigma`` holds +1/-1 labels.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    sigma: np.ndarray
    origin: np.ndarray | None = None  # vertex ids in the graph this was induced from

    @classmethod
    def from_edges(cls, n: int, edges, sigma) -> "LabeledGraph":
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        sigma = np.asarray(sigma, dtype=np.int8)
        if sigma.shape != (n,):
            raise ValueError(f"sigma must have length {n}")
        if not np.all(np.abs(sigma) == 1):
            raise ValueError("sigma entries must be +1 or -1")
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise ValueError("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise ValueError("self-loops are not allowed")
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        keys = lo * n + hi
        if np.unique(keys).size != keys.size:
            raise ValueError("duplicate edges")
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        order = np.lexsort((dst, src))
        indices = dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(n, indptr, indices, sigma)

    @property
    def m(self) -> int:
        return int(self.indices.size // 2)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def rows(self) -> np.ndarray:
        """Row (owning vertex) of every CSR slot."""
        return np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)

    def edges(self) -> np.ndarray:
        """Undirected edge list with ``i < j``, sorted."""
        rows = self.rows()
        keep = rows < self.indices
        return np.column_stack([rows[keep], self.indices[keep]])

    def induced(self, keep) -> tuple["LabeledGraph", np.ndarray]:
        """Subgraph on the vertices where ``keep`` is true.

        Returns the subgraph and the ids of its vertices in this graph.  The
        subgraph's ``origin`` maps back to the root graph through any chain
        of inductions.
        """
        keep = np.asarray(keep, dtype=bool)
        ids = np.flatnonzero(keep)
        remap = np.full(self.n, -1, dtype=np.int64)
        remap[ids] = np.arange(ids.size)
        e = self.edges()
        e = e[keep[e[:, 0]] & keep[e[:, 1]]]
        sub = LabeledGraph.from_edges(ids.size, remap[e], self.sigma[ids])
        origin = ids if self.origin is None else self.origin[ids]
        return dataclasses.replace(sub, origin=origin), ids

    def neighbor_label_counts(self, labels) -> tuple[np.ndarray, np.ndarray]:
        """Per-vertex counts of neighbors labeled +1 and -1 under ``labels``."""
        lab = np.asarray(labels)[self.indices]
        rows = self.rows()
        plus = np.bincount(rows, weights=(lab > 0), minlength=self.n).astype(np.int64)
        minus = np.bincount(rows, weights=(lab < 0), minlength=self.n).astype(np.int64)
        return plus, minus

    def check(self) -> None:
        """Assert symmetry, no loops, no duplicates."""
        rows = self.rows()
        assert np.all(rows != self.indices), "self-loop"
        fwd = rows * self.n + self.indices
        assert np.all(np.diff(fwd) > 0), "unsorted or duplicate adjacency"
        back = np.sort(self.indices * self.n + rows)
        assert np.array_equal(fwd, back), "asymmetric adjacency"
        assert self.sigma.shape == (self.n,) and np.all(np.abs(self.sigma) == 1)

    def to_json(self) -> str:
        return json.dumps({
            "n": self.n,
            "sigma": self.sigma.tolist(),
            "edges": self.edges().tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "LabeledGraph":
        d = json.loads(text)
        return cls.from_edges(d["n"], d["edges"], d["sigma"])


def _pairwise_edges(rng, n, sigma, params):
    iu, ju = np.triu_indices(n, k=1)
    same_plus = (sigma[iu] > 0) & (sigma[ju] > 0)
    same_minus = (sigma[iu] < 0) & (sigma[ju] < 0)
    p = np.where(same_plus, params.a, np.where(same_minus, params.c, params.b)) / n
    hit = rng.random(iu.size) < p
    return np.column_stack([iu[hit], ju[hit]])


def _distinct_codes(rng, k, draw):
    """Uniformly random ``k``-subset of pair codes, built by rejection.

    ``draw(rng, size)`` returns i.i.d. uniform codes over the block.
    """
    codes = np.unique(draw(rng, k))
    while codes.size < k:
        extra = np.setdiff1d(draw(rng, 2 * (k - codes.size) + 16), codes)
        need = k - codes.size
        if extra.size > need:
            extra = rng.choice(extra, size=need, replace=False)
        codes = np.union1d(codes, extra)
    if codes.size > k:
        codes = np.sort(rng.choice(codes, size=k, replace=False))
    return codes


def _block_edges(rng, members, rate, n, other=None):
    """Edges of one label block with per-pair probability ``rate / n``.

    Draws the edge count from its exact binomial law, then a uniform subset of
    that many distinct pairs, which reproduces independent Bernoulli pairs.
    """
    p = rate / n
    s = members.size
    if other is None:
        pairs = s * (s - 1) // 2
        k = int(rng.binomial(pairs, p)) if pairs else 0
        if k == 0:
            return np.empty((0, 2), dtype=np.int64)
        if k > pairs // 2:
            e = np.column_stack(np.triu_indices(s, k=1))
            e = e[rng.random(pairs) < p]
            return np.column_stack([members[e[:, 0]], members[e[:, 1]]])

        def draw(r, size):
            i = r.integers(0, s, size)
            j = r.integers(0, s, size)
            ok = i != j
            i, j = np.minimum(i[ok], j[ok]), np.maximum(i[ok], j[ok])
            return i * s + j

        codes = _distinct_codes(rng, k, draw)
        return np.column_stack([members[codes // s], members[codes % s]])
    t = other.size
    pairs = s * t
    k = int(rng.binomial(pairs, p)) if pairs else 0
    if k == 0:
        return np.empty((0, 2), dtype=np.int64)
    if k > pairs // 2:
        hit = np.flatnonzero(rng.random(pairs) < p)
        return np.column_stack([members[hit // t], other[hit % t]])
    codes = _distinct_codes(rng, k, lambda r, size: r.integers(0, pairs, size))
    return np.column_stack([members[codes // t], other[codes % t]])


def sample_sbm(params: ModelParams, seed: SeedLike) -> LabeledGraph:
    """Sample labels and edges of the two-cluster SBM.

    For ``n <= PAIRWISE_MAX_N`` every pair is an independent Bernoulli draw.
    Above that, each of the three label blocks (++, --, +-) gets a
    ``Binomial(#pairs, rate/n)`` edge count and a uniformly random set of that
    many distinct pairs, drawn by rejection of duplicates.  Both schemes give
    exactly the same distribution.
    """
    rng = make_rng(seed)
    n = params.n
    sigma = np.where(rng.random(n) < params.rho, 1, -1).astype(np.int8)
    if n <= PAIRWISE_MAX_N:
        edges = _pairwise_edges(rng, n, sigma, params)
    else:
        plus = np.flatnonzero(sigma > 0)
        minus = np.flatnonzero(sigma < 0)
        edges = np.concatenate([
            _block_edges(rng, plus, params.a, n),
            _block_edges(rng, minus, params.c, n),
            _block_edges(rng, plus, params.b, n, other=minus),
        ])
    return LabeledGraph.from_edges(n, edges, sigma)


# ---------------------------------------------------------------------------
# trees


@dataclass(frozen=True, eq=False)
class GWTree:
    """Rooted tree stored breadth-first; node 0 is the root.

    Children of a node occupy the contiguous range
    ``child_start[i] : child_start[i] + child_count[i]``.  Nodes at depth
    ``max_depth`` are the boundary: their offspring were never generated.
    """

    parent: np.ndarray
    depth: np.ndarray
    tau: np.ndarray
    child_start: np.ndarray
    child_count: np.ndarray
    max_depth: int
    tau_tilde: np.ndarray | None = None

    @property
    def size(self) -> int:
        return int(self.parent.size)

    def children(self, i: int) -> np.ndarray:
        s = self.child_start[i]
        return np.arange(s, s + self.child_count[i])

    def level(self, s: int) -> np.ndarray:
        """Nodes at depth exactly ``s``."""
        return np.flatnonzero(self.depth == s)

    def with_noisy_labels(self, tau_tilde) -> "GWTree":
        return GWTree(self.parent, self.depth, self.tau, self.child_start,
                      self.child_count, self.max_depth, np.asarray(tau_tilde, dtype=np.int8))

    def to_graph(self) -> LabeledGraph:
        """The tree as an undirected graph (vertex ids = node ids)."""
        child = np.arange(1, self.size)
        edges = np.column_stack([self.parent[1:], child])
        return LabeledGraph.from_edges(self.size, edges, self.tau)

    @classmethod
    def from_parents(cls, parent, tau, max_depth=None, tau_tilde=None) -> "GWTree":
        """Build from a BFS-ordered parent array (``parent[0] == -1``)."""
        parent = np.asarray(parent, dtype=np.int64)
        if parent.size == 0 or parent[0] != -1 or np.any(parent[1:] < 0):
            raise ValueError("parent[0] must be -1 and the only root")
        if np.any(parent[1:] >= np.arange(1, parent.size)) or np.any(np.diff(parent[1:]) < 0):
            raise ValueError("parents must be listed in breadth-first order")
        depth = np.zeros(parent.size, dtype=np.int64)
        for i in range(1, parent.size):
            depth[i] = depth[parent[i]] + 1
        count = np.bincount(parent[1:], minlength=parent.size).astype(np.int64)
        start = np.ones(parent.size, dtype=np.int64)
        start[1:] = 1 + np.cumsum(count)[:-1]
        md = int(depth.max()) if max_depth is None else int(max_depth)
        if md < depth.max():
            raise ValueError("max_depth smaller than the tree depth")
        tt = None if tau_tilde is None else np.asarray(tau_tilde, dtype=np.int8)
        return cls(parent, depth, np.asarray(tau, dtype=np.int8), start, count, md, tt)

    def to_json(self) -> str:
        return json.dumps({
            "parent": self.parent.tolist(),
            "tau": self.tau.tolist(),
            "tau_tilde": None if self.tau_tilde is None else self.tau_tilde.tolist(),
            "max_depth": self.max_depth,
        })

    @classmethod
    def from_json(cls, text: str) -> "GWTree":
        d = json.loads(text)
        return cls.from_parents(d["parent"], d["tau"], d["max_depth"], d["tau_tilde"])


def offspring_means(params: ModelParams) -> np.ndarray:
    """``[[E#+ | +, E#- | +], [E#+ | -, E#- | -]]`` children counts."""
    r, rb = params.rho, 1.0 - params.rho
    return np.array([[r * params.a, rb * params.b], [r * params.b, rb * params.c]])


def sample_gw_tree(params: ModelParams, depth: int, root_label: int | None = None,
                   seed: SeedLike = 0, max_nodes: int = DEFAULT_MAX_TREE_NODES) -> GWTree:
    """Poisson two-type branching tree grown breadth-first to ``depth``."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    rng = make_rng(seed)
    if root_label is None:
        root = 1 if rng.random() < params.rho else -1
    elif root_label in (1, -1):
        root = int(root_label)
    else:
        raise ValueError("root_label must be +1, -1 or None")
    means = offspring_means(params)
    taus = [np.array([root], dtype=np.int8)]
    parents = [np.array([-1], dtype=np.int64)]
    counts = []
    total = 1
    offset = 0
    for _ in range(depth):
        lab = taus[-1]
        row = (lab < 0).astype(np.int64)
        n_plus = rng.poisson(means[row, 0])
        n_minus = rng.poisson(means[row, 1])
        k = n_plus + n_minus
        total += int(k.sum())
        if total > max_nodes:
            raise TreeSizeError(f"tree exceeds {max_nodes} nodes")
        counts.append(k)
        ids = np.arange(offset, offset + lab.size)
        offset += lab.size
        parents.append(np.repeat(ids, k))
        # within each family: the plus children first, then the minus ones
        first = np.repeat(np.cumsum(k) - k, k)
        rank = np.arange(int(k.sum())) - first
        taus.append(np.where(rank < np.repeat(n_plus, k), 1, -1).astype(np.int8))
    counts.append(np.zeros(taus[-1].size, dtype=np.int64))
    parent = np.concatenate(parents)
    tau = np.concatenate(taus)
    count = np.concatenate(counts).astype(np.int64)
    start = np.ones(parent.size, dtype=np.int64)
    start[1:] = 1 + np.cumsum(count)[:-1]
    dep = np.concatenate([np.full(t.size, s, dtype=np.int64) for s, t in enumerate(taus)])
    return GWTree(parent, dep, tau, start, count, depth)


def attach_noisy_labels(tree: GWTree, alpha: float, seed: SeedLike) -> GWTree:
    """Copy of ``tree`` whose ``tau_tilde`` flips each label with probability alpha."""
    if not 0.0 <= alpha <= 0.5:
        raise ValueError(f"alpha must lie in [0, 1/2], got {alpha!r}")
    rng = make_rng(seed)
    flip = rng.random(tree.size) < alpha
    return tree.with_noisy_labels(np.where(flip, -tree.tau, tree.tau))
