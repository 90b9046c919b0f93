"""Gaussian density evolution for the two-cluster BP recursion.

The scalar map is ``v -> theta + lambda * h(v)`` with
``h(v) = E[tanh(v + sqrt(v) Z + phi)]``.  Expectations over the Gaussian are
computed in the LLR variable ``y = v + phi + sqrt(v) Z`` with composite
Gauss-Legendre panels; outside ``|y| <= SATURATION`` tanh equals +-1 to double
precision, so the tails are added in closed form with the Gaussian tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import erfc

from .model import ModelParams

__all__ = [
    "Kind",
    "DeTrajectory",
    "FixedPoints",
    "ConvergenceError",
    "gaussian_expectation",
    "q_function",
    "h",
    "h_prime",
    "de_map",
    "de_step",
    "trajectory",
    "fixed_points",
    "predicted_misclassification",
    "scan_fixed_points",
]

SATURATION = 20.0
PANEL_ORDER = 16
_SPAN = 12.0  # Gaussian standard deviations covered; the rest is < 1e-32
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(PANEL_ORDER)
_GL_NODES.setflags(write=False)
_GL_WEIGHTS.setflags(write=False)

ITER_CAP = 100_000
STEP_TOL = 1e-12
RESIDUAL_TOL = 1e-10


class ConvergenceError(RuntimeError):
    pass


def q_function(x):
    """Standard normal upper tail ``P(Z > x)``."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def _panels(lo, hi, width, order):
    k = max(1, int(math.ceil((hi - lo) / width)))
    edges = np.linspace(lo, hi, k + 1)
    if order == PANEL_ORDER:
        x, w = _GL_NODES, _GL_WEIGHTS
    else:
        x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def gaussian_expectation(f, mean, var, low_limit, high_limit, refine=1):
    """``E[f(Y)]`` for ``Y ~ N(mean, var)`` where f is flat outside ``[-S, S]``.

    ``low_limit``/``high_limit`` are the values of f below ``-S`` and above
    ``S``.  ``refine`` multiplies the node count (used for self-consistency
    checks).
    """
    if var <= 0.0:
        return float(f(np.array([mean]))[0])
    sd = math.sqrt(var)
    lo = max(mean - _SPAN * sd, -SATURATION)
    hi = min(mean + _SPAN * sd, SATURATION)
    total = 0.0
    if lo < hi:
        width = min(0.5, 0.5 * sd) / refine
        y, w = _panels(lo, hi, width, PANEL_ORDER)
        dens = np.exp(-0.5 * ((y - mean) / sd) ** 2) / (sd * math.sqrt(2.0 * math.pi))
        total += float(np.dot(w, f(y) * dens))
    if low_limit != 0.0:
        total += low_limit * (1.0 - q_function((-SATURATION - mean) / sd))
    if high_limit != 0.0:
        total += high_limit * q_function((SATURATION - mean) / sd)
    return total


def _check_v(v):
    v = float(v)
    if not v >= 0.0:
        raise ValueError(f"v must be non-negative, got {v!r}")
    return v


def h(v: float, phi: float = 0.0, refine: int = 1) -> float:
    """``E[tanh(v + sqrt(v) Z + phi)]``; equals ``tanh(phi)`` at ``v = 0``."""
    v = _check_v(v)
    if v == 0.0:
        return math.tanh(phi)
    return gaussian_expectation(np.tanh, v + phi, v, -1.0, 1.0, refine)


def _hp_integrand(y):
    t = np.tanh(y)
    return (1.0 - t) * (1.0 - t * t)


def h_prime(v: float, phi: float = 0.0, refine: int = 1) -> float:
    """Derivative of :func:`h` in ``v``: ``E[(1 - tanh Y)(1 - tanh^2 Y)]``."""
    v = float(v)
    if not v > 0.0:
        raise ValueError(f"h_prime needs v > 0, got {v!r}")
    return gaussian_expectation(_hp_integrand, v + phi, v, 0.0, 0.0, refine)


def _h_prime_limit(v, phi):
    return _hp_integrand(np.array([phi]))[0] if v == 0.0 else h_prime(v, phi)


def _canonical(params: ModelParams) -> ModelParams:
    # the mirrored model has theta >= 0; both give the same map
    return params.mirrored() if params.rho > 0.5 else params


def de_map(v: float, params: ModelParams) -> float:
    """``theta + lambda * h(v)`` (alias of :func:`de_step`)."""
    p = _canonical(params)
    return p.theta + p.lam * h(v, p.phi)


def de_step(v: float, params: ModelParams) -> float:
    return de_map(_check_v(v), params)


def lower_bound(params: ModelParams) -> float:
    r = params.rho
    return (r * params.mu - (1 - r) * params.nu) ** 2 / 4.0


def upper_bound(params: ModelParams) -> float:
    r = params.rho
    return (r * params.mu**2 + (1 - r) * params.nu**2) / 4.0


class Kind(str, Enum):
    V = "V"
    W = "W"
    U = "U"


@dataclass
class DeTrajectory:
    kind: Kind
    values: list[float]
    converged: bool
    residual: float
    alpha: float | None = None

    @property
    def last(self) -> float:
        return self.values[-1]

    def at(self, t: int) -> float:
        """Value indexed the way the recursion is: ``v_t`` / ``w_t`` / ``u_t``.

        V starts at ``v_0``; W and U start at index 1.
        """
        i = t if self.kind == Kind.V else t - 1
        if i < 0:
            raise IndexError(f"{self.kind.value}-trajectory starts at t=1")
        if i < len(self.values):
            return self.values[i]
        if self.converged:
            return self.values[-1]
        raise IndexError(f"t={t} beyond the computed trajectory")


def _start(params, kind, alpha):
    p = _canonical(params)
    if kind == Kind.V:
        return 0.0
    if kind == Kind.W:
        return p.theta + p.lam
    if alpha is None or not 0.0 <= alpha < 0.5:
        raise ValueError(f"U-trajectory needs alpha in [0, 1/2), got {alpha!r}")
    return (1.0 - 2.0 * alpha) ** 2 * params.mu**2 / 4.0


def trajectory(params: ModelParams, kind: Kind | str = Kind.V, alpha: float | None = None,
               t_max: int = 100, tol: float = STEP_TOL) -> DeTrajectory:
    """Iterate the map from the kind-specific start.

    V starts at 0, W at ``theta + lambda``, U at ``(1 - 2 alpha)^2 mu^2 / 4``
    (the symmetric-model convention ``rho = 1/2, mu = nu``).  Stops after
    ``t_max`` steps or when successive values differ by less than ``tol``.
    """
    kind = Kind(kind)
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    v = _start(params, kind, alpha)
    values = [v]
    converged = False
    for _ in range(t_max):
        nxt = de_map(v, params)
        values.append(nxt)
        done = abs(nxt - v) < tol
        v = nxt
        if done:
            converged = True
            break
    return DeTrajectory(kind, values, converged, abs(v - de_map(v, params)),
                        alpha if kind == Kind.U else None)


@dataclass
class FixedPoints:
    v_lower: float
    v_upper: float
    unique: bool
    residual_lower: float
    residual_upper: float
    iterations: tuple[int, int] = field(default=(0, 0))

    def to_dict(self) -> dict:
        return {
            "v_lower": self.v_lower, "v_upper": self.v_upper, "unique": self.unique,
            "residual_lower": self.residual_lower, "residual_upper": self.residual_upper,
            "iterations": list(self.iterations),
        }


def _refine_root(params, lo, hi):
    """Bisection on ``v - map(v)`` inside a sign-change bracket."""
    g = lambda x: x - de_map(x, params)
    glo = g(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0 or hi - lo < 1e-15 * max(1.0, hi):
            return mid
        if (gm < 0) == (glo < 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _limit(params, kind, tol, cap):
    # the residual at the stopping point equals the next step, so it is
    # bounded by the step tolerance once the monotone sequence has converged
    tr = trajectory(params, kind, t_max=cap, tol=tol)
    return tr.last, tr.residual, len(tr.values) - 1, tr.converged


def fixed_points(params: ModelParams, tol: float = 1e-8, cap: int = ITER_CAP) -> FixedPoints:
    """Smallest and largest fixed points of ``v = theta + lambda h(v)``.

    Each is the limit of the monotone V / W trajectory, iterated until the
    step falls below ``min(tol / 10, 1e-12)`` and checked against the residual
    ``|v - theta - lambda h(v)| < 1e-10``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    step = min(tol / 10.0, STEP_TOL)
    lo, r_lo, it_lo, ok_lo = _limit(params, Kind.V, step, cap)
    hi, r_hi, it_hi, ok_hi = _limit(params, Kind.W, step, cap)
    if not (ok_lo and ok_hi) or max(r_lo, r_hi) >= RESIDUAL_TOL:
        raise ConvergenceError(
            f"fixed-point iteration did not converge within {cap} steps "
            f"(residuals {r_lo:.3e}, {r_hi:.3e})")
    return FixedPoints(lo, hi, abs(hi - lo) < tol, r_lo, r_hi, (it_lo, it_hi))


def predicted_misclassification(v: float, rho: float):
    """``rho Q((v+phi)/sqrt v) + (1-rho) Q((v-phi)/sqrt v)``; ``min(rho, 1-rho)`` at 0."""
    v = _check_v(v)
    if v == 0.0:
        return min(rho, 1.0 - rho)
    phi = 0.5 * math.log(rho / (1.0 - rho))
    s = math.sqrt(v)
    return rho * q_function((v + phi) / s) + (1.0 - rho) * q_function((v - phi) / s)


@dataclass
class ScanResult:
    """Curve samples for one parameter set plus root brackets of ``v - map(v)``."""

    params: ModelParams
    v: np.ndarray
    h: np.ndarray
    h_prime: np.ndarray
    map_value: np.ndarray
    brackets: list[tuple[float, float]]
    roots: list[float]


def scan_fixed_points(params_grid, v_grid) -> list[ScanResult]:
    """Evaluate h, h' and the map on ``v_grid`` for each parameter set.

    Brackets are consecutive grid points where ``v - map(v)`` changes sign
    (a grid value that is exactly a root counts once); each bracket is refined
    to a root by bisection.
    """
    v_grid = np.asarray(v_grid, dtype=float)
    out = []
    for params in params_grid:
        p = _canonical(params)
        hv = np.array([h(v, p.phi) for v in v_grid])
        hp = np.array([_h_prime_limit(v, p.phi) for v in v_grid])
        mv = p.theta + p.lam * hv
        g = v_grid - mv
        brackets, roots = [], []
        for i in range(len(v_grid) - 1):
            if g[i] == 0.0:
                brackets.append((v_grid[i], v_grid[i]))
                roots.append(float(v_grid[i]))
            elif g[i] * g[i + 1] < 0:
                brackets.append((float(v_grid[i]), float(v_grid[i + 1])))
                roots.append(_refine_root(params, v_grid[i], v_grid[i + 1]))
        if len(v_grid) and g[-1] == 0.0:
            brackets.append((v_grid[-1], v_grid[-1]))
            roots.append(float(v_grid[-1]))
        out.append(ScanResult(params, v_grid, hv, hp, mv, brackets, roots))
    return out
