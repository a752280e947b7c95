"""Exact linear flow of a bubble in the harmonic trap.

Under ``i u_t = -Delta u + |x|^2 u`` a bubble stays a bubble.  Its frame
parameters obey a closed system of ODEs, and its spectrum rotates mode by
mode in the internal time ``s`` with ``ds/dt = 1/L^2``.  The frame system
is integrable: in action-angle variables the centre and momentum rotate at
angular speed 2 per axis and the width/chirp pair rotates at speed 4 along a
level set of ``h = (L^4 + 1 + B^2/4) / (4 L^2)``.  This module implements
that map, its inverse, the closed-form internal time, and the resulting
propagator.

All array routines broadcast over leading axes so that whole ensembles are
advanced in one call.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .bubble import Bubble, BubbleEnsemble

logger = logging.getLogger(__name__)

#: Rounding slack below h = 1/2 that is clamped back to exactly 1/2.
H_DEGENERATE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ActionAngleState:
    """Action-angle coordinates of one bubble frame.

    Attributes
    ----------
    h : float
        Width/chirp action, ``h >= 1/2``.
    rho : float
        ``sqrt(4 h^2 - 1)``, stored separately because it loses accuracy
        when recomputed from ``h`` close to 1/2.
    xi : float
        Width/chirp angle.
    a : numpy.ndarray
        Per-axis actions ``(X_i^2 + beta_i^2) / 2``.
    theta : numpy.ndarray
        Per-axis angles.
    m0 : int
        Branch index of ``xi/2`` at the reference time.
    A_ref, L_ref, gamma_ref : float
        Amplitude, width and phase at the reference time.
    theta_ref : numpy.ndarray
        Angles at the reference time, needed for the phase update.
    """

    h: float
    rho: float
    xi: float
    a: np.ndarray
    theta: np.ndarray
    m0: int
    A_ref: float
    L_ref: float
    gamma_ref: float
    theta_ref: np.ndarray

    @property
    def d(self) -> int:
        return self.a.size


def branch_index(phi):
    """Integer ``m`` with ``phi - m*pi`` in ``(-pi/2, pi/2]``."""
    return np.ceil(np.asarray(phi) / np.pi - 0.5).astype(int)


def _frame_to_angles(L, B, X, beta):
    """Vectorized forward map; ``X`` and ``beta`` carry a trailing axis."""
    L2 = L * L
    quarter_b2 = 0.25 * B * B
    # 2h - 1 and 2h + 1 written as sums of squares to keep rho accurate near 1/2
    two_h_minus = ((L2 - 1.0) ** 2 + quarter_b2) / (2.0 * L2)
    two_h_plus = ((L2 + 1.0) ** 2 + quarter_b2) / (2.0 * L2)
    h = 0.5 * (1.0 + two_h_minus)
    rho = np.sqrt(two_h_minus * two_h_plus)
    # 2h - L^2 = (B^2/4 - (L^4 - 1)) / (2 L^2)
    xi = np.arctan2(0.5 * B, (quarter_b2 - (L2 - 1.0) * (L2 + 1.0)) / (2.0 * L2))
    a = 0.5 * (X * X + beta * beta)
    theta = np.arctan2(X, beta)
    return h, rho, xi, a, theta


def _angles_to_frame(h, rho, xi, a, theta):
    c, s = np.cos(xi), np.sin(xi)
    pc = rho * c
    # avoid cancellation in 2h - rho*cos(xi) when the cosine is positive
    with np.errstate(divide="ignore", invalid="ignore"):
        stable = (1.0 + (rho * s) ** 2) / (2.0 * h + pc)
    L2 = np.where(pc > 0, stable, 2.0 * h - pc)
    L = np.sqrt(L2)
    B = 2.0 * rho * s
    r = np.sqrt(2.0 * a)
    X = np.sin(theta) * r
    beta = np.cos(theta) * r
    return L, B, X, beta


def _branch_function(phi, c):
    """Continuous lift of ``atan2(c sin phi, cos phi)``."""
    m = np.ceil(phi / np.pi - 0.5)
    p = phi - m * np.pi
    return np.arctan2(c * np.sin(p), np.cos(p)) + m * np.pi


def _sigma(h, rho, xi0, t):
    c = 2.0 * h + rho
    phi0 = 0.5 * xi0
    ds = 0.5 * (_branch_function(phi0, c) - _branch_function(phi0 - 2.0 * t, c))
    return np.where(rho == 0, t, ds)


def to_action_angle(b: Bubble) -> ActionAngleState:
    """Map a bubble frame to action-angle coordinates.

    ``2h - 1`` is evaluated as a sum of squares, so it is never negative and
    vanishes exactly at the stationary width ``L = 1, B = 0``, where the
    angle ``xi`` is irrelevant.
    """
    h, rho, xi, a, theta = _frame_to_angles(b.L, b.B, b.X, b.beta)
    return ActionAngleState(
        h=float(h), rho=float(rho), xi=float(xi), a=a, theta=theta,
        m0=int(branch_index(0.5 * float(xi))), A_ref=b.A, L_ref=b.L,
        gamma_ref=b.gamma, theta_ref=theta.copy())


def advance_action_angle(st: ActionAngleState, t: float) -> ActionAngleState:
    """Linear angle flow: ``theta += 2t`` and ``xi -= 4t``."""
    return ActionAngleState(
        h=st.h, rho=st.rho, xi=st.xi - 4.0 * t, a=st.a, theta=st.theta + 2.0 * t,
        m0=st.m0, A_ref=st.A_ref, L_ref=st.L_ref, gamma_ref=st.gamma_ref,
        theta_ref=st.theta_ref)


def from_action_angle(st: ActionAngleState, A_ref: float | None = None,
                      L_ref: float | None = None, gamma_ref: float | None = None):
    """Recover ``(A, L, B, X, beta, gamma)`` from action-angle coordinates.

    The reference values default to the ones stored on the state.

    Returns
    -------
    tuple
        ``(A, L, B, X, beta, gamma)`` with ``X`` and ``beta`` arrays.
    """
    A_ref = st.A_ref if A_ref is None else A_ref
    L_ref = st.L_ref if L_ref is None else L_ref
    gamma_ref = st.gamma_ref if gamma_ref is None else gamma_ref
    L, B, X, beta = _angles_to_frame(st.h, st.rho, st.xi, st.a, st.theta)
    L, B = float(L), float(B)
    A = A_ref * (L / L_ref) ** ((2 - st.d) / 2)
    gamma = gamma_ref + float(np.sum(0.5 * st.a * (np.sin(2 * st.theta) - np.sin(2 * st.theta_ref))))
    return A, L, B, X, beta, gamma


def compute_sigma(h0: float, xi0: float, t, rho: float | None = None):
    """Internal time ``s(t) - s(0)`` accumulated over a linear flow of length ``t``.

    Closed form of ``int_0^t dt' / L(t')^2`` along the orbit that starts at
    angle ``xi0`` on the level ``h0``.  Continuous and strictly increasing in
    ``t``, valid for negative ``t`` and exact (equal to ``t``) at ``h0 = 1/2``.

    Parameters
    ----------
    h0 : float
        Action of the width/chirp pair.
    xi0 : float
        Angle at time zero.
    t : float or array_like
        Elapsed time(s).
    rho : float, optional
        ``sqrt(4 h0^2 - 1)`` if known to better accuracy than from ``h0``.
    """
    if h0 < 0.5 - H_DEGENERATE_TOL:
        raise ValueError(f"action h must be >= 1/2, got {h0}")
    h0 = max(h0, 0.5)
    if rho is None:
        rho = np.sqrt((2 * h0 - 1) * (2 * h0 + 1))
    out = _sigma(h0, rho, xi0, np.asarray(t, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def linear_frame_flow(L, B, X, beta, A, gamma, t):
    """Advance stacked frame parameters by the exact linear flow.

    Shapes: ``L, B, A, gamma`` are ``(N,)`` and ``X, beta`` are ``(N, d)``;
    ``t`` is a scalar or ``(N,)``.

    Returns
    -------
    tuple
        ``(A, L, B, X, beta, gamma, ds)`` after time ``t``.
    """
    L = np.asarray(L, dtype=float)
    t = np.broadcast_to(np.asarray(t, dtype=float), L.shape)
    d = np.shape(X)[-1]
    X = np.asarray(X, dtype=float)
    beta = np.asarray(beta, dtype=float)
    h, rho, xi, a, theta = _frame_to_angles(L, B, X, beta)
    L1, B1, _, _ = _angles_to_frame(h, rho, xi - 4.0 * t, a, theta)
    # theta += 2t applied as a plane rotation of (X, beta); rebuilding the
    # pair from sqrt(2a) adds a systematic error to the action at every call
    c, s = np.cos(2.0 * t)[..., None], np.sin(2.0 * t)[..., None]
    X1 = c * X + s * beta
    beta1 = c * beta - s * X
    A1 = A * (L1 / L) ** ((2 - d) / 2)
    # (a/2) sin(2 theta) equals X beta / 2 componentwise
    gamma1 = gamma + 0.5 * np.sum(X1 * beta1 - X * beta, axis=-1)
    ds = _sigma(h, rho, xi, t)
    return A1, L1, B1, X1, beta1, gamma1, ds


def propagate_linear(b: Bubble, t: float) -> Bubble:
    """Exact solution of the trapped linear flow for time ``t`` from one bubble."""
    A, L, B, X, beta, gamma, ds = linear_frame_flow(
        np.array([b.L]), np.array([b.B]), b.X[None, :], b.beta[None, :],
        np.array([b.A]), np.array([b.gamma]), t)
    ds = float(ds[0])
    return Bubble(float(A[0]), float(L[0]), float(B[0]), X[0], beta[0], float(gamma[0]),
                  b.spectrum.advance(ds), b.s + ds)


def propagate_ensemble_linear(e: BubbleEnsemble, t: float) -> BubbleEnsemble:
    """Apply :func:`propagate_linear` to every bubble, vectorized."""
    bs = e.bubbles
    A, L, B, X, beta, gamma, ds = linear_frame_flow(
        np.array([b.L for b in bs]), np.array([b.B for b in bs]),
        np.array([b.X for b in bs]), np.array([b.beta for b in bs]),
        np.array([b.A for b in bs]), np.array([b.gamma for b in bs]), t)
    return BubbleEnsemble(tuple(
        Bubble(float(A[j]), float(L[j]), float(B[j]), X[j], beta[j], float(gamma[j]),
               b.spectrum.advance(float(ds[j])), b.s + float(ds[j]))
        for j, b in enumerate(bs)))


def modulation_rhs(A, L, B, X, beta):
    """Right-hand side of the frame ODEs under the linear trapped flow.

    Returns
    -------
    dict
        Time derivatives keyed ``A, L, B, X, beta, gamma, s``.
    """
    d = np.shape(X)[-1]
    L2 = L * L
    return {
        "A": A * B * (d - 2) / (2.0 * L2),
        "L": -B / L,
        "B": -4.0 / L2 + 4.0 * L2 - B * B / L2,
        "X": 2.0 * beta,
        "beta": -2.0 * X,
        "gamma": np.sum(beta * beta - X * X, axis=-1),
        "s": 1.0 / L2,
    }
