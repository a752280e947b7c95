import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlsbubbles.bubble import Bubble, BubbleEnsemble, HermiteSpectrum
from nlsbubbles.modulation import (advance_action_angle, compute_sigma, from_action_angle,
                                   linear_frame_flow, modulation_rhs, propagate_ensemble_linear,
                                   propagate_linear, to_action_angle)

from conftest import random_bubble


def frame(b):
    return np.concatenate([[b.A, b.L, b.B, b.gamma], b.X, b.beta])


def test_ground_frame_has_minimal_action():
    st_ = to_action_angle(Bubble.gaussian(1.0, 1.0, 0.0, [0.0, 0.0]))
    assert st_.h == 0.5
    np.testing.assert_array_equal(st_.a, [0.0, 0.0])


def test_widened_chirped_frame_angles():
    st_ = to_action_angle(Bubble.gaussian(1.0, math.sqrt(2), 2.0, [0.0, 0.0]))
    assert st_.h == pytest.approx(0.75, rel=1e-15)
    assert st_.xi == pytest.approx(math.atan2(2, -1), rel=1e-15)
    assert st_.xi == pytest.approx(2.034443936, abs=1e-9)


def test_position_only_axis_angle():
    st_ = to_action_angle(Bubble.gaussian(1.0, 1.0, 0.0, [1.0], [0.0]))
    assert st_.a[0] == 0.5
    assert st_.theta[0] == pytest.approx(math.pi / 2)


@pytest.mark.parametrize("xi", [-2.0, 0.0, 1.3, 3.0])
def test_minimal_action_reconstructs_unit_width(xi):
    b = Bubble.gaussian(1.0, 1.0, 0.0, [0.0])
    st_ = to_action_angle(b)
    st_ = advance_action_angle(st_, -xi / 4)
    _, L, B, _, _, _ = from_action_angle(st_)
    assert L == 1.0 and B == 0.0


def test_inverse_of_widened_chirped_example():
    st_ = to_action_angle(Bubble.gaussian(1.0, math.sqrt(2), 2.0, [0.0, 0.0]))
    _, L, B, _, _, _ = from_action_angle(st_)
    assert L * L == pytest.approx(2.0, rel=1e-14)
    assert B == pytest.approx(2.0, rel=1e-14)


@settings(max_examples=300, deadline=None)
@given(d=st.integers(1, 3), seed=st.integers(0, 2 ** 32 - 1))
def test_action_angle_round_trip(d, seed):
    b = random_bubble(np.random.default_rng(seed), d, width=(0.2, 5.0), chirp=10.0,
                      centre=5.0, momentum=5.0)
    A, L, B, X, beta, gamma = from_action_angle(to_action_angle(b))
    assert L == pytest.approx(b.L, rel=1e-12)
    assert B == pytest.approx(b.B, rel=1e-12, abs=1e-12)
    np.testing.assert_allclose(X, b.X, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(beta, b.beta, rtol=1e-12, atol=1e-12)
    assert A == pytest.approx(b.A, rel=1e-12)
    assert gamma == pytest.approx(b.gamma, abs=1e-12)


def test_ground_bubble_is_stationary_up_to_phase():
    b = Bubble(1.0, 1.0, 0.0, [0.0, 0.0], [0.0, 0.0], 0.0, HermiteSpectrum(2, {(0, 0): 1.0}))
    x = np.array([[0.3, -0.4], [1.0, 0.5]])
    for t in (0.1, 1.7, -2.3):
        bt = propagate_linear(b, t)
        assert (bt.A, bt.L, bt.B, bt.gamma) == (1.0, 1.0, 0.0, 0.0)
        assert bt.s == pytest.approx(t, abs=1e-15)
        ref = np.exp(-2j * t) * np.exp(-np.sum(x * x, axis=1) / 2) / math.sqrt(math.pi)
        np.testing.assert_allclose(bt.evaluate(x), ref, atol=1e-15)


def test_centre_rotation_matches_rk4_integration():
    b = Bubble.gaussian(1.0, 1.0, 0.0, [1.0, 0.0], [0.0, 0.0])
    t_end, dt = 0.5, 1e-5
    y = np.array([1.0, 0.0])  # (X_1, beta_1)
    f = lambda v: np.array([2 * v[1], -2 * v[0]])
    for _ in range(int(round(t_end / dt))):
        k1 = f(y)
        k2 = f(y + dt / 2 * k1)
        k3 = f(y + dt / 2 * k2)
        k4 = f(y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    bt = propagate_linear(b, t_end)
    assert bt.X[0] == pytest.approx(y[0], abs=1e-8)
    assert bt.beta[0] == pytest.approx(y[1], abs=1e-8)
    assert bt.X[0] == pytest.approx(math.cos(1.0), abs=1e-15)
    assert bt.beta[0] == pytest.approx(-math.sin(1.0), abs=1e-15)


def test_flow_is_reversible(rng):
    for _ in range(50):
        b = random_bubble(rng, int(rng.integers(1, 4)))
        t = rng.uniform(-3, 3)
        back = propagate_linear(propagate_linear(b, t), -t)
        np.testing.assert_allclose(frame(back), frame(b), rtol=1e-11, atol=1e-11)
        assert back.s == pytest.approx(b.s, abs=1e-11)


def test_flow_is_periodic_with_period_pi(rng):
    b = random_bubble(rng, 2)
    bt = propagate_linear(b, math.pi)
    np.testing.assert_allclose(frame(bt), frame(b), rtol=1e-12, atol=1e-12)
    assert bt.s > 0


def test_flow_composes(rng):
    b = random_bubble(rng, 2)
    direct = propagate_linear(b, 1.3)
    twice = propagate_linear(propagate_linear(b, 0.4), 0.9)
    np.testing.assert_allclose(frame(twice), frame(direct), rtol=1e-12, atol=1e-12)
    assert twice.s == pytest.approx(direct.s, rel=1e-12)


def test_flow_matches_frame_ode_by_finite_differences(rng):
    eps = 1e-6
    for _ in range(20):
        b = random_bubble(rng, 2)
        plus, minus = propagate_linear(b, eps), propagate_linear(b, -eps)
        fd = (frame(plus) - frame(minus)) / (2 * eps)
        rhs = modulation_rhs(b.A, b.L, b.B, b.X, b.beta)
        exact = np.concatenate([[rhs["A"], rhs["L"], rhs["B"], rhs["gamma"]], rhs["X"], rhs["beta"]])
        np.testing.assert_allclose(fd, exact, rtol=1e-6, atol=1e-6)
        assert (plus.s - minus.s) / (2 * eps) == pytest.approx(rhs["s"], rel=1e-6)


def test_amplitude_law_outside_two_dimensions():
    b = Bubble.gaussian(1.5, 0.7, 1.2, [0.3], [0.1])
    bt = propagate_linear(b, 0.8)
    assert bt.A == pytest.approx(1.5 * (bt.L / 0.7) ** 0.5, rel=1e-14)


def test_internal_time_at_minimal_action():
    assert compute_sigma(0.5, 1.234, 0.7) == 0.7


def test_internal_time_rejects_small_action():
    with pytest.raises(ValueError):
        compute_sigma(0.4, 0.0, 1.0)


@pytest.mark.parametrize("seed", range(5))
def test_internal_time_rate_is_inverse_square_width(seed):
    rng = np.random.default_rng(seed)
    b = random_bubble(rng, 2, width=(0.3, 3.0), chirp=5.0)
    st_ = to_action_angle(b)
    eps = 1e-5
    for t in np.linspace(-3, 3, 50):
        rate = (compute_sigma(st_.h, st_.xi, t + eps, st_.rho)
                - compute_sigma(st_.h, st_.xi, t - eps, st_.rho)) / (2 * eps)
        Lt = propagate_linear(b, t).L
        assert rate == pytest.approx(1 / Lt ** 2, rel=1e-6)


def test_internal_time_is_additive(rng):
    for _ in range(20):
        b = random_bubble(rng, 2, width=(0.3, 3.0), chirp=5.0)
        t1, t2 = rng.uniform(0, 4, 2)
        st0 = to_action_angle(b)
        st1 = to_action_angle(propagate_linear(b, t1))
        total = compute_sigma(st0.h, st0.xi, t1 + t2, st0.rho)
        parts = compute_sigma(st0.h, st0.xi, t1, st0.rho) + compute_sigma(st1.h, st1.xi, t2, st1.rho)
        assert total == pytest.approx(parts, rel=1e-10, abs=1e-10)


def test_internal_time_is_increasing_across_branches():
    st_ = to_action_angle(Bubble.gaussian(1.0, 3.0, 4.0, [0.0]))
    t = np.linspace(0, 10, 20001)
    s = compute_sigma(st_.h, st_.xi, t, st_.rho)
    assert np.all(np.diff(s) > 0)


def test_ensemble_flow_equals_per_bubble_flow(rng):
    bs = [random_bubble(rng, 2) for _ in range(3)]
    e = propagate_ensemble_linear(BubbleEnsemble.of(bs), 0.9)
    for got, b in zip(e, bs):
        want = propagate_linear(b, 0.9)
        np.testing.assert_allclose(frame(got), frame(want), rtol=1e-14, atol=1e-14)


def test_empty_spectrum_bubble_stays_zero():
    b = Bubble(1.0, 1.0, 0.5, [0.2, 0.1], [0.0, 0.3], 0.0, HermiteSpectrum(2, {}))
    e = propagate_ensemble_linear(BubbleEnsemble.of([b]), 0.6)
    assert np.all(e.evaluate(np.zeros((3, 2))) == 0)


def test_excited_modes_pick_up_eigenphase():
    b = Bubble(1.0, 1.0, 0.0, [0.0, 0.0], [0.0, 0.0], 0.0, HermiteSpectrum(2, {(2, 1): 1.0}))
    bt = propagate_linear(b, 0.37)
    assert bt.spectrum.coeffs[(2, 1)] == pytest.approx(np.exp(-8j * 0.37), abs=1e-15)


def test_vectorized_flow_broadcasts_time():
    L = np.array([1.0, 2.0])
    B = np.array([0.0, 1.0])
    X = np.zeros((2, 1))
    out = linear_frame_flow(L, B, X, X, np.ones(2), np.zeros(2), np.array([0.1, 0.2]))
    assert out[1].shape == (2,) and out[3].shape == (2, 1)
