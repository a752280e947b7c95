import math

import numpy as np
import pytest

from nlsbubbles.bubble import hermite_functions
from nlsbubbles.spectral import (GridField, aliasing_fraction, check_aliasing, linear_step,
                                 nonlinear_step, propagate_linear, strang_step)


def hermite_mode(n, shape=(256, 256), half=15.0):
    def fn(x):
        hx = hermite_functions(n[0], x[..., 0])[n[0]]
        hy = hermite_functions(n[1], x[..., 1])[n[1]]
        return hx * hy
    return GridField.from_function(fn, shape, half)


def rel_l2(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def test_zero_step_is_identity():
    f = hermite_mode((1, 0))
    assert linear_step(f, 0.0) is f
    assert nonlinear_step(f, 0.0) is f


def test_ground_mode_phase():
    f = hermite_mode((0, 0))
    g = linear_step(f, 1e-3)
    assert rel_l2(g.values, np.exp(-2e-3j) * f.values) < 1e-9


@pytest.mark.parametrize("n", [(2, 1), (0, 3), (4, 4)])
def test_excited_mode_phase(n):
    f = hermite_mode(n)
    dt = 0.3
    g = linear_step(f, dt)
    assert rel_l2(g.values, np.exp(-1j * (2 * sum(n) + 2) * dt) * f.values) < 1e-8


def test_linear_step_is_unitary(rng):
    f = GridField.from_function(lambda x: np.exp(-np.sum((x - 1) ** 2, axis=-1)) * (1 + 0.5j * x[..., 0]),
                                (128, 128), 12.0)
    g = linear_step(f, 0.7)
    assert g.norm() == pytest.approx(f.norm(), rel=1e-13)


def test_linear_step_rejects_tangent_singularity():
    f = hermite_mode((0, 0), (32, 32), 8.0)
    with pytest.raises(ValueError, match="substeps"):
        linear_step(f, math.pi / 2)


def test_long_propagation_is_substepped():
    f = hermite_mode((1, 0), (128, 128), 12.0)
    g = propagate_linear(f, 2.5)
    assert rel_l2(g.values, np.exp(-4j * 2.5) * f.values) < 1e-10


def test_linear_steps_compose():
    f = GridField.from_function(lambda x: np.exp(-np.sum((x - 1.5) ** 2, axis=-1) / 2),
                                (128, 128), 12.0)
    one = linear_step(f, 0.4)
    two = linear_step(linear_step(f, 0.2), 0.2)
    assert rel_l2(two.values, one.values) < 1e-12


def test_constant_modulus_field_rotates_uniformly():
    f = GridField(np.exp(1j * np.linspace(0, 3, 64)), 5.0)
    g = nonlinear_step(f, 0.25, lam=2.0)
    np.testing.assert_allclose(g.values, f.values * np.exp(-0.5j), atol=1e-15)


def test_nonlinear_step_keeps_modulus(rng):
    f = GridField(rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32)), 4.0)
    g = nonlinear_step(f, 0.9)
    np.testing.assert_allclose(np.abs(g.values), np.abs(f.values), rtol=1e-15, atol=1e-15)


def test_strang_without_coupling_is_linear_step():
    f = GridField.from_function(lambda x: np.exp(-np.sum((x - 1.5) ** 2, axis=-1) / 2) * np.exp(1j * x[..., 1]),
                                (128, 128), 12.0)
    assert rel_l2(strang_step(f, 0.3, lam=0.0).values, linear_step(f, 0.3).values) < 1e-12


def test_strang_conserves_mass():
    f = GridField.from_function(lambda x: 2 * np.exp(-np.sum((x - 1) ** 2, axis=-1)), (64, 64), 10.0)
    m0 = f.norm()
    for _ in range(1000):
        f = strang_step(f, 1e-3)
    assert abs(f.norm() / m0 - 1) < 1e-10


def test_one_dimensional_grid():
    f = GridField.from_function(lambda x: hermite_functions(3, x[..., 0])[3], (256,), 12.0)
    g = linear_step(f, 0.2)
    assert rel_l2(g.values, np.exp(-7j * 0.2) * f.values) < 1e-10


def test_resolved_field_has_no_aliasing():
    f = hermite_mode((0, 0), (128, 128), 12.0)
    assert aliasing_fraction(f) < 1e-20
    assert check_aliasing(f)


def test_rough_field_triggers_aliasing_warning(rng, caplog):
    f = GridField(rng.normal(size=(64, 64)).astype(complex), 5.0)
    with caplog.at_level("WARNING"):
        assert not check_aliasing(f)
    assert "aliasing" in caplog.text


def test_grid_validation():
    with pytest.raises(ValueError):
        GridField(np.zeros((4, 4)), 1.0)
    with pytest.raises(ValueError):
        GridField(np.zeros((8, 8, 8)), 1.0)
    with pytest.raises(ValueError):
        GridField(np.zeros(16), -1.0)


def test_csv_dump(tmp_path):
    f = GridField.from_function(lambda x: np.exp(-np.sum(x * x, axis=-1)), (8, 10), 2.0)
    f.to_csv(tmp_path / "g.csv")
    lines = (tmp_path / "g.csv").read_text().splitlines()
    assert lines[0] == "x,y,re,im"
    assert len(lines) == 81
