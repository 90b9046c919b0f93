import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sbmbp.density_evolution import (
    ConvergenceError,
    Kind,
    fixed_points,
    h,
    h_prime,
    de_step,
    lower_bound,
    predicted_misclassification,
    q_function,
    scan_fixed_points,
    trajectory,
    upper_bound,
)
from sbmbp.model import ModelParams

N = 10**6


def P(rho, mu, nu, b=100.0):
    return ModelParams(N, rho, b, mu, nu)


def h_oracle(v, phi):
    mpmath.mp.dps = 30
    s = mpmath.sqrt(v)
    f = lambda z: mpmath.tanh(v + s * z + phi) * mpmath.npdf(z)
    return float(mpmath.quad(f, [-mpmath.inf, -5, 0, 5, mpmath.inf]))


# --- Q -------------------------------------------------------------------

def test_q_basic_values():
    assert q_function(0.0) == 0.5
    assert q_function(math.inf) == 0.0
    assert q_function(-math.inf) == 1.0


def test_q_against_quadrature():
    mpmath.mp.dps = 30
    for x in (-3.0, -0.4, 0.7, 1.6448536, 4.0, 9.0):
        ref = float(mpmath.quad(mpmath.npdf, [x, mpmath.inf]))
        assert q_function(x) == pytest.approx(ref, rel=1e-12)
    assert abs(q_function(1.6448536) - 0.05) < 1e-6


# --- h and h' -------------------------------------------------------------

@pytest.mark.parametrize("phi", [-1.2, -0.3, 0.0, 0.4, 2.0])
def test_h_at_zero_is_tanh_phi(phi):
    assert h(0.0, phi) == math.tanh(phi)


@pytest.mark.parametrize("v,phi", [(0.01, 0.0), (0.5, -0.8), (1.0, 0.0), (3.0, 0.3),
                                   (20.0, -1.5), (150.0, 0.0)])
def test_h_matches_high_precision(v, phi):
    assert h(v, phi) == pytest.approx(h_oracle(v, phi), abs=1e-13)


def test_h_saturates():
    assert h(100.0, 0.0) > 1 - 1e-6
    assert h(5000.0, -2.0) <= 1.0


def test_h_monte_carlo():
    z = np.random.default_rng(3).standard_normal(10**7)
    assert abs(np.mean(np.tanh(1.0 + z)) - h(1.0, 0.0)) < 1e-3


def test_h_rejects_negative_v():
    with pytest.raises(ValueError):
        h(-0.1)


@pytest.mark.parametrize("v", [1e-3, 0.3, 2.0, 7.5, 40.0, 300.0])
@pytest.mark.parametrize("phi", [-1.0, 0.0, 0.3])
def test_quadrature_refinement_stable(v, phi):
    assert abs(h(v, phi) - h(v, phi, refine=2)) < 1e-10
    assert abs(h_prime(v, phi) - h_prime(v, phi, refine=2)) < 1e-10


def test_h_prime_near_zero():
    assert 0.99 <= h_prime(1e-6, 0.0) <= 1.001


def test_h_prime_rejects_nonpositive():
    for v in (0.0, -1.0):
        with pytest.raises(ValueError):
            h_prime(v)


@pytest.mark.parametrize("v,phi", [(2.0, 0.3), (0.4, -0.6), (5.0, 0.0), (11.0, 1.1)])
def test_h_prime_finite_difference(v, phi):
    eps = 1e-5
    fd = (h(v + eps, phi) - h(v - eps, phi)) / (2 * eps)
    assert abs(h_prime(v, phi) - fd) < 1e-6


@given(st.floats(1e-4, 60.0), st.floats(-2.5, 2.5))
def test_h_bounded_and_h_prime_nonnegative(v, phi):
    assert abs(h(v, phi)) <= 1.0
    assert h_prime(v, phi) >= -1e-12


def test_h_nondecreasing_and_concave_at_phi_zero():
    grid = np.linspace(0.0, 12.0, 241)
    vals = np.array([h(v, 0.0) for v in grid])
    assert np.all(np.diff(vals) >= -1e-14)
    assert np.all(np.diff(vals, 2) <= 1e-8)


# --- map and trajectories -------------------------------------------------

@given(st.floats(0.05, 0.95), st.floats(-6, 6), st.floats(-6, 6))
def test_first_step_is_lower_bound(rho, mu, nu):
    p = P(rho, mu, nu)
    assert de_step(0.0, p) == pytest.approx(lower_bound(p), rel=1e-12, abs=1e-14)


def test_symmetric_zero_is_fixed():
    assert de_step(0.0, P(0.5, 2.0, 2.0)) == 0.0


def test_w_second_step_monte_carlo():
    p = P(0.3, 3.0, -1.0)
    w1 = p.theta + p.lam
    assert w1 == pytest.approx(upper_bound(p), rel=1e-12)
    z = np.random.default_rng(11).standard_normal(4 * 10**6)
    mc = p.theta + p.lam * np.mean(np.tanh(w1 + math.sqrt(w1) * z + p.phi))
    assert trajectory(p, Kind.W, t_max=2).at(2) == pytest.approx(mc, abs=3e-3)


@given(st.floats(0.05, 0.95), st.floats(-6, 6), st.floats(-6, 6))
def test_mirror_symmetry(rho, mu, nu):
    p = P(rho, mu, nu)
    for v in (0.0, 0.7, 3.0):
        assert de_step(v, p) == pytest.approx(de_step(v, p.mirrored()), rel=1e-12, abs=1e-14)


def test_subcritical_v_stays_zero():
    tr = trajectory(P(0.5, 1.0, 1.0), Kind.V, t_max=20)
    assert all(v == 0.0 for v in tr.values)


@given(st.floats(0.02, 0.98), st.floats(-5, 5), st.floats(-5, 5))
def test_trajectories_monotone(rho, mu, nu):
    p = P(rho, mu, nu)
    v = np.array(trajectory(p, Kind.V, t_max=30).values)
    w = np.array(trajectory(p, Kind.W, t_max=30).values)
    assert np.all(np.diff(v) >= -1e-12)
    assert np.all(np.diff(w) <= 1e-12)
    assert w[0] == pytest.approx(upper_bound(p), rel=1e-12)


def test_u_trajectory_start_and_validation():
    p = P(0.5, 3.0, 3.0)
    tr = trajectory(p, Kind.U, alpha=0.2, t_max=5)
    assert tr.at(1) == pytest.approx(0.36 * 9 / 4)
    for bad in (None, -0.1, 0.5):
        with pytest.raises(ValueError):
            trajectory(p, Kind.U, alpha=bad)


def test_u_trajectory_tends_to_upper_fixed_point():
    p = P(0.5, 3.0, 3.0)
    fp = fixed_points(p)
    for alpha in (0.05, 0.3, 0.45):
        tr = trajectory(p, Kind.U, alpha=alpha, t_max=10_000, tol=1e-14)
        assert abs(tr.last - fp.v_upper) < 1e-6


# --- fixed points ---------------------------------------------------------

def test_unique_fixed_point_examples():
    fp = fixed_points(P(0.5, 3.0, 0.0))
    assert fp.unique and abs(fp.v_lower - fp.v_upper) < 1e-8
    fp = fixed_points(P(0.5, 1.0, 1.0))
    assert fp.v_lower == 0.0 and fp.v_upper < 1e-8


def test_multiple_fixed_points_example():
    fp = fixed_points(P(0.01, 50.0, 0.0))
    assert not fp.unique and fp.v_upper - fp.v_lower > 0.1


@given(st.floats(0.02, 0.98), st.floats(-6, 6), st.floats(-6, 6))
def test_fixed_points_sandwich(rho, mu, nu):
    p = P(rho, mu, nu)
    try:
        fp = fixed_points(p)
    except ConvergenceError:
        return  # near-critical; the cap is reported rather than a value
    assert lower_bound(p) - 1e-9 <= fp.v_lower <= fp.v_upper + 1e-9
    assert fp.v_upper <= upper_bound(p) + 1e-9
    for v in (fp.v_lower, fp.v_upper):
        assert abs(v - de_step(v, p)) < 1e-10


def test_fixed_points_rejects_bad_tol():
    with pytest.raises(ValueError):
        fixed_points(P(0.5, 3.0, 0.0), tol=0.0)


def test_fixed_points_reports_cap():
    with pytest.raises(ConvergenceError):
        fixed_points(P(0.5, 2.0, 2.0), cap=5)


# --- predictor ------------------------------------------------------------

def test_predictor_examples():
    assert predicted_misclassification(0.0, 0.3) == 0.3
    assert predicted_misclassification(2.0, 0.5) == pytest.approx(q_function(math.sqrt(2.0)))
    assert predicted_misclassification(100.0, 0.5) < 1e-6


@given(st.floats(0.01, 0.99), st.floats(0.0, 50.0))
def test_predictor_range(rho, v):
    p = predicted_misclassification(v, rho)
    assert 0.0 <= p <= min(rho, 1 - rho) + 1e-15


def test_predictor_nonincreasing_symmetric():
    vals = [predicted_misclassification(v, 0.5) for v in np.linspace(0, 20, 200)]
    assert np.all(np.diff(vals) <= 0)


# --- scans ----------------------------------------------------------------

def test_scan_h_prime_shapes():
    grid = np.linspace(0.0, 6.0, 241)
    half, small = scan_fixed_points([P(0.5, 0, 0), P(0.05, 0, 0)], grid)
    assert half.h_prime[0] == pytest.approx(1.0)
    assert np.all(np.diff(half.h_prime) <= 1e-12)
    assert np.any(np.diff(small.h_prime) > 0)


@pytest.mark.parametrize("mu,nu", [(50.0, 0.0), (40.0, 1.5)])
def test_scan_three_roots(mu, nu):
    (res,) = scan_fixed_points([P(0.01, mu, nu, b=3000.0)], np.linspace(0, 10, 1001))
    assert len(res.brackets) == 3
    fp = fixed_points(P(0.01, mu, nu, b=3000.0))
    assert res.roots[0] == pytest.approx(fp.v_lower, abs=1e-9)
    assert res.roots[-1] == pytest.approx(fp.v_upper, abs=1e-9)


def test_scan_zero_signal_row():
    (res,) = scan_fixed_points([P(0.3, 0.0, 0.0)], np.linspace(0, 3, 31))
    assert np.all(res.map_value == 0.0)
