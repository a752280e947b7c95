import math

import numpy as np
import pytest

from nlsbubbles.bubble import Bubble, BubbleEnsemble, HermiteSpectrum
from nlsbubbles.dfmp import (RK4, ButcherTableau, DfmpSolution, DfmpSystem, assemble_system,
                             linear_residual_check, nonlinear_rhs, parameter_derivatives,
                             rk_step, solve_system, step_nonlinear)
from nlsbubbles.observables import bubble_mass
from nlsbubbles.params import FrameArrays

from conftest import random_bubble, random_ensemble


def velocities(der):
    return np.concatenate([der.A, der.L, der.B, der.X.ravel(), der.beta.ravel(), der.gamma])


def test_single_centered_system_structure():
    sys = assemble_system(BubbleEnsemble.of([Bubble.gaussian(1.0, 1.0, 0.0, [0.0, 0.0])]))
    assert sys.gram.shape == (4, 4)
    assert sys.gram[0, 0] == pytest.approx(math.pi)
    for i in (1, 2):
        assert sys.gram[0, i] == 0 and sys.gram[i, 0] == 0
        assert sys.gram[3, i] == 0 and sys.gram[i, 3] == 0
    assert sys.source[1] == 0 and sys.source[2] == 0


def test_real_block_reproduces_complex_product(rng):
    sys = assemble_system(random_ensemble(rng, 2))
    M, rhs = sys.real_block()
    v = rng.normal(size=8) + 1j * rng.normal(size=8)
    w = sys.gram @ v
    np.testing.assert_allclose(M @ np.concatenate([v.real, v.imag]),
                               np.concatenate([w.real, w.imag]), atol=1e-12)
    np.testing.assert_array_equal(rhs, np.concatenate([sys.source.real, sys.source.imag]))


def test_zero_source_gives_zero_solution(rng):
    sys = assemble_system(random_ensemble(rng, 3))
    sol = solve_system(DfmpSystem(sys.gram, np.zeros_like(sys.source), 3, 2))
    assert np.all(sol.coefficients == 0)
    assert sol.residual == 0.0


def test_real_and_complex_forms_agree(rng):
    sys = assemble_system(random_ensemble(rng, 3, centre=4.0))
    real = solve_system(sys, form="real")
    cplx = solve_system(sys, form="complex")
    assert real.effective_rank == cplx.effective_rank == 12
    np.testing.assert_allclose(real.coefficients, cplx.coefficients,
                               atol=1e-8 * np.max(np.abs(cplx.coefficients)))
    assert real.residual < 1e-8


def test_unknown_solve_form(rng):
    with pytest.raises(ValueError):
        solve_system(assemble_system(random_ensemble(rng, 1)), form="qr")


def test_duplicate_bubbles_are_rank_deficient_but_solvable(rng):
    b = random_bubble(rng)
    sys = assemble_system(BubbleEnsemble.of([b, b]))
    sol = solve_system(sys)
    assert sol.effective_rank == 4
    np.testing.assert_allclose(sol.coefficients[0], sol.coefficients[1],
                               atol=1e-10 * np.max(np.abs(sol.coefficients)))
    assert sol.residual < 1e-8
    # the pair moves exactly like one bubble of twice the amplitude
    single = Bubble.gaussian(2 * b.A, b.L, b.B, b.X, b.beta, b.gamma)
    d_pair, _ = nonlinear_rhs(FrameArrays.from_ensemble(BubbleEnsemble.of([b, b])))
    d_one, _ = nonlinear_rhs(FrameArrays.from_ensemble(single))
    assert d_pair.L[0] == pytest.approx(d_one.L[0], rel=1e-8, abs=1e-12)
    assert d_pair.B[0] == pytest.approx(d_one.B[0], rel=1e-8, abs=1e-12)
    np.testing.assert_allclose(d_pair.X[0], d_one.X[0], atol=1e-10)


def test_zero_solution_gives_zero_velocities(rng):
    P = FrameArrays.from_ensemble(random_ensemble(rng, 2))
    sol = DfmpSolution(np.zeros((2, 4), complex), 1.0, 8, 0.0)
    assert np.all(velocities(parameter_derivatives(sol, P)) == 0)


def test_width_velocity_substitution():
    c = 0.3
    P = FrameArrays.from_ensemble(Bubble.gaussian(1.7, 2.0, 0.7, [0.1, 0.2], [0.3, 0.4]))
    E = np.zeros((1, 4), complex)
    E[0, 3] = 1j * c * P.A[0] / P.L[0] ** 3  # F6 = c after the L^3/A rescaling
    der = parameter_derivatives(DfmpSolution(E, 1.0, 4, 0.0), P)
    assert der.L[0] == pytest.approx(c / 2)
    assert der.B[0] == pytest.approx(0.7 * c / 2)
    assert der.A[0] == pytest.approx(1.7 * c / 4)
    assert np.all(der.X == 0) and np.all(der.beta == 0) and der.gamma[0] == 0


def test_velocities_invariant_under_global_phase(rng):
    e = random_ensemble(rng, 3)
    shifted = BubbleEnsemble.of(b.replace(gamma=b.gamma + 1.1) for b in e)
    d0, _ = nonlinear_rhs(FrameArrays.from_ensemble(e))
    d1, _ = nonlinear_rhs(FrameArrays.from_ensemble(shifted))
    np.testing.assert_allclose(velocities(d1), velocities(d0), atol=1e-9)


def test_velocities_invariant_under_translation(rng):
    e = random_ensemble(rng, 3)
    shift = np.array([0.7, -1.3])
    moved = BubbleEnsemble.of(b.replace(X=b.X + shift) for b in e)
    d0, _ = nonlinear_rhs(FrameArrays.from_ensemble(e))
    d1, _ = nonlinear_rhs(FrameArrays.from_ensemble(moved))
    np.testing.assert_allclose(velocities(d1), velocities(d0), atol=1e-8)


def test_velocities_scale_with_coupling(rng):
    P = FrameArrays.from_ensemble(random_ensemble(rng, 2))
    d1, _ = nonlinear_rhs(P, lam=1.0)
    d3, _ = nonlinear_rhs(P, lam=-3.0)
    np.testing.assert_allclose(velocities(d3), -3 * velocities(d1), rtol=1e-9, atol=1e-12)


def test_zero_step_is_identity(rng):
    e = random_ensemble(rng, 3)
    out = step_nonlinear(e, 0.0)
    for a, b in zip(out, e):
        assert (a.A, a.L, a.B, a.gamma) == (b.A, b.L, b.B, b.gamma)
        np.testing.assert_array_equal(a.X, b.X)


def test_zero_amplitude_is_rejected():
    e = BubbleEnsemble.of([Bubble.gaussian(0.0, 1.0, 0.0, [0.0]), Bubble.gaussian(1.0, 1.0, 0.0, [1.0])])
    with pytest.raises(ValueError, match="zero amplitude"):
        assemble_system(e)


def test_non_gaussian_spectrum_is_rejected():
    b = Bubble(1.0, 1.0, 0.0, [0.0], [0.0], 0.0, HermiteSpectrum(1, {(1,): 1.0}))
    with pytest.raises(ValueError):
        step_nonlinear(BubbleEnsemble.of([b]), 0.1)


def test_tiny_bubble_is_frozen(rng):
    big = random_bubble(rng)
    tiny = Bubble.gaussian(1e-14, 1.0, 0.0, [5.0, 5.0])
    der, _ = nonlinear_rhs(FrameArrays.from_ensemble(BubbleEnsemble.of([big, tiny])))
    assert der.L[1] == 0 and der.A[1] == 0 and np.all(der.X[1] == 0)


def test_single_bubble_conserves_mass_and_quartic_energy():
    e = BubbleEnsemble.of([Bubble.gaussian(1.0, 1.0, 0.0, [0.0, 0.0])])
    m0 = bubble_mass(e)
    P = FrameArrays.from_ensemble(e)
    q0 = P.A[0] ** 4 / P.L[0] ** 2
    for _ in range(200):
        e = step_nonlinear(e, 5e-3)
    P = FrameArrays.from_ensemble(e)
    assert bubble_mass(e) == pytest.approx(m0, rel=1e-10)
    assert P.A[0] ** 4 / P.L[0] ** 2 == pytest.approx(q0, rel=1e-10)
    assert m0 == pytest.approx(math.pi)


def test_rk_step_reports_diagnostics(rng):
    P = FrameArrays.from_ensemble(random_ensemble(rng, 2))
    P1, diag = rk_step(P, 1e-3)
    assert P1.n == 2 and diag.effective_rank == 8 and diag.condition >= 1


def test_tableau_must_be_explicit():
    with pytest.raises(ValueError):
        ButcherTableau(np.eye(2), np.array([0.5, 0.5]), np.array([0.0, 1.0]))


def test_forward_euler_tableau_is_first_order(rng):
    euler = ButcherTableau(np.zeros((1, 1)), np.array([1.0]), np.array([0.0]))
    P = FrameArrays.from_ensemble(random_ensemble(rng, 2))
    ref, _ = rk_step(P, 0.02, tableau=RK4)
    errs = []
    for n in (4, 8):
        Q = P
        for _ in range(n):
            Q, _ = rk_step(Q, 0.02 / n, tableau=euler)
        errs.append(np.max(np.abs(Q.pack() - ref.pack())))
    assert 1.6 < errs[0] / errs[1] < 2.4


def test_linear_residual_single_generic_bubble():
    b = Bubble.gaussian(1.3, 0.8, 0.6, [0.4, -0.7], [0.9, 0.2], 0.5)
    assert linear_residual_check(BubbleEnsemble.of([b])).max_error < 1e-8


def test_linear_residual_centered_bubble_is_fixed_point():
    rep = linear_residual_check(BubbleEnsemble.of([Bubble.gaussian(1.0, 1.0, 0.0, [0.0, 0.0])]))
    for key, val in rep.recovered.items():
        assert np.all(np.abs(val) < 1e-12), key


def test_linear_residual_separated_pair():
    e = BubbleEnsemble.of([Bubble.gaussian(1.0, 1.0, 0.3, [-4.0, 0.0], [0.5, 0.0]),
                           Bubble.gaussian(0.8, 1.0, -0.2, [4.0, 0.0], [0.0, -0.4], 1.0)])
    assert linear_residual_check(e).max_error < 1e-6
