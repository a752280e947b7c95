"""Conserved quantities in closed form (bubbles) and by quadrature (grids).

For the flow ``i psi_t = mu (-Delta + |x|^2) psi + lam |psi|^2 psi`` the
following are conserved:

* mass ``||psi||^2``;
* energy ``(mu/2) <H psi, psi> + (lam/4) ||psi||_4^4``;
* in two dimensions the trap momentum
  ``(E - mu ||x psi||^2)^2 + mu^2 (Im int x.grad(psi) conj(psi))^2``;
* per axis ``j`` the centre-of-mass pair
  ``(1/4)[(Im int d_j psi conj(psi))^2 + (int x_j |psi|^2)^2]``.

Bubble values are assembled from the Gram tensor and the cubic projections,
grid values from the periodic trapezoid rule with spectral derivatives.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .bubble import BubbleEnsemble
from .gaussian import gram_tensor, interaction_vector
from .params import FrameArrays

logger = logging.getLogger(__name__)

#: Floor applied to drifts before they are written for logarithmic plots.
DRIFT_FLOOR = 1e-16


@dataclass(frozen=True)
class ObservableParams:
    """Coefficients of the flow: ``mu`` for the oscillator, ``lam`` for the cubic term."""

    mu: float = 1.0
    lam: float = 1.0


@dataclass(frozen=True)
class ObservableRecord:
    """Conserved quantities at one time.

    ``momentum`` and ``nonradial`` are NaN outside two dimensions.
    """

    t: float
    mass: float
    energy: float
    momentum: float
    nonradial: tuple[float, ...] = field(default_factory=tuple)


def _frames(e) -> FrameArrays:
    return e if isinstance(e, FrameArrays) else FrameArrays.from_ensemble(e)


class _BubbleSums:
    """Shared pair sums for one ensemble; every field is a total over (j, k)."""

    def __init__(self, P: FrameArrays):
        self.P = P
        T = gram_tensor(P)  # T[j, k, r, c] = <b_{j,r}, b_{k,c}>
        d = P.d
        w = P.A / P.L
        W = w[:, None] * w[None, :]
        self.W = W
        self.T = T
        self.g00 = T[:, :, 0, 0]
        self.g_lin = T[:, :, 1:d + 1, 0]           # <b_{j,n+1}, b_{k,0}>
        self.g_quad = T[:, :, d + 1, 0]            # <b_{j,d+1}, b_{k,0}>
        self.alpha = (2 + 1j * P.B) / (2 * P.L)    # grad u_j = (i beta_j - alpha_j y_j) u_j

    def mass(self) -> float:
        return float(np.real(np.sum(self.W * self.g00)))

    def grad_inner(self) -> complex:
        """``sum_{j,k} <grad u_j, grad u_k>``."""
        P, T, d = self.P, self.T, self.P.d
        bb = P.beta @ P.beta.T
        t1 = bb * self.g00
        t2 = 1j * self.alpha[:, None] * np.einsum("kn,jkn->jk", P.beta, self.g_lin)
        t3 = -1j * np.conj(self.alpha)[None, :] * np.einsum("jn,jkn->jk", P.beta, T[:, :, 0, 1:d + 1])
        diag = np.einsum("jknn->jk", T[:, :, 1:d + 1, 1:d + 1])
        t4 = self.alpha[:, None] * np.conj(self.alpha)[None, :] * diag
        return np.sum(self.W * (t1 + t2 + t3 + t4))

    def x2_inner(self) -> complex:
        """``sum_{j,k} <|x|^2 u_j, u_k>``."""
        P = self.P
        r2 = np.sum(P.X ** 2, axis=1)
        term = ((P.L ** 2)[:, None] * self.g_quad
                + 2 * P.L[:, None] * np.einsum("jn,jkn->jk", P.X, self.g_lin)
                + r2[:, None] * self.g00)
        return np.sum(self.W * term)

    def x_grad_inner(self) -> complex:
        """``sum_{j,k} <x.grad u_j, u_k>``."""
        P = self.P
        bX = np.sum(P.beta * P.X, axis=1)
        half = (2 + 1j * P.B) / 2
        term = (1j * P.L[:, None] * np.einsum("jn,jkn->jk", P.beta, self.g_lin)
                - half[:, None] * self.g_quad
                + 1j * bX[:, None] * self.g00
                - (half / P.L)[:, None] * np.einsum("jn,jkn->jk", P.X, self.g_lin))
        return np.sum(self.W * term)

    def axis_momentum(self) -> np.ndarray:
        """``Im sum_{j,k} <d_n u_j, u_k>`` for every axis ``n``."""
        P = self.P
        term = (1j * P.beta[:, None, :] * self.g00[..., None]
                - self.alpha[:, None, None] * self.g_lin)
        return np.imag(np.sum(self.W[..., None] * term, axis=(0, 1)))

    def axis_centre(self) -> np.ndarray:
        """``sum_{j,k} <x_n u_j, u_k>`` for every axis ``n`` (real)."""
        P = self.P
        term = P.L[:, None, None] * self.g_lin + P.X[:, None, :] * self.g00[..., None]
        return np.real(np.sum(self.W[..., None] * term, axis=(0, 1)))

    def quartic(self) -> float:
        """``||u||_4^4 = <u |u|^2, u>``."""
        S = interaction_vector(self.P)
        return float(np.real(np.sum(self.P.A / self.P.L * S[:, 0])))


def bubble_mass(e) -> float:
    """Mass of a Gaussian ensemble."""
    return _BubbleSums(_frames(e)).mass()


def bubble_energy(e, p: ObservableParams = ObservableParams()) -> float:
    """Energy of a Gaussian ensemble."""
    s = _BubbleSums(_frames(e))
    return _energy(s, p)


def _energy(s: _BubbleSums, p: ObservableParams) -> float:
    lin = 0.0
    if p.mu != 0:
        lin = 0.5 * p.mu * float(np.real(s.grad_inner() + s.x2_inner()))
    nl = 0.25 * p.lam * s.quartic() if p.lam != 0 else 0.0
    return lin + nl


def _require_2d(P: FrameArrays) -> None:
    if P.d != 2:
        raise ValueError(f"this invariant is defined in two dimensions only, got d={P.d}")


def bubble_momentum(e, p: ObservableParams = ObservableParams()) -> float:
    """Trap momentum invariant of a two-dimensional Gaussian ensemble."""
    P = _frames(e)
    _require_2d(P)
    s = _BubbleSums(P)
    E = _energy(s, p)
    x2 = float(np.real(s.x2_inner()))
    vir = float(np.imag(s.x_grad_inner()))
    return (E - p.mu * x2) ** 2 + p.mu ** 2 * vir ** 2


def bubble_nonradial(e) -> np.ndarray:
    """Per-axis centre-of-mass invariants of a two-dimensional Gaussian ensemble."""
    P = _frames(e)
    _require_2d(P)
    s = _BubbleSums(P)
    return 0.25 * (s.axis_momentum() ** 2 + s.axis_centre() ** 2)


def bubble_observables(e, t: float = 0.0, p: ObservableParams = ObservableParams()) -> ObservableRecord:
    """All invariants of a Gaussian ensemble in one pass."""
    P = _frames(e)
    s = _BubbleSums(P)
    E = _energy(s, p)
    if P.d == 2:
        x2 = float(np.real(s.x2_inner()))
        vir = float(np.imag(s.x_grad_inner()))
        mom = (E - p.mu * x2) ** 2 + p.mu ** 2 * vir ** 2
        nonrad = tuple(float(v) for v in 0.25 * (s.axis_momentum() ** 2 + s.axis_centre() ** 2))
    else:
        mom = float("nan")
        nonrad = tuple([float("nan")] * P.d)
    return ObservableRecord(t, s.mass(), E, mom, nonrad)


# --- grid quadrature -------------------------------------------------------

def grid_axes(shape, halfwidth) -> list[np.ndarray]:
    """Uniform periodic nodes ``-h + k * 2h / n`` for each axis."""
    hw = np.broadcast_to(np.asarray(halfwidth, dtype=float), (len(shape),))
    return [-hw[i] + np.arange(n) * (2 * hw[i] / n) for i, n in enumerate(shape)]


def grid_wavenumbers(shape, halfwidth) -> list[np.ndarray]:
    """Angular wavenumbers matching :func:`grid_axes`."""
    hw = np.broadcast_to(np.asarray(halfwidth, dtype=float), (len(shape),))
    return [2 * np.pi * np.fft.fftfreq(n, d=2 * hw[i] / n) for i, n in enumerate(shape)]


def _cell_volume(shape, halfwidth) -> float:
    hw = np.broadcast_to(np.asarray(halfwidth, dtype=float), (len(shape),))
    return float(np.prod([2 * hw[i] / n for i, n in enumerate(shape)]))


def spectral_gradient(values: np.ndarray, halfwidth) -> list[np.ndarray]:
    """Components of the gradient computed with FFTs."""
    shape = values.shape
    ks = grid_wavenumbers(shape, halfwidth)
    vh = np.fft.fftn(values)
    grads = []
    for i, k in enumerate(ks):
        kshape = [1] * len(shape)
        kshape[i] = -1
        grads.append(np.fft.ifftn(1j * k.reshape(kshape) * vh))
    return grads


def _mesh(shape, halfwidth) -> list[np.ndarray]:
    return np.meshgrid(*grid_axes(shape, halfwidth), indexing="ij")


def grid_observables(values: np.ndarray, halfwidth, t: float = 0.0,
                     p: ObservableParams = ObservableParams()) -> ObservableRecord:
    """Invariants of a sampled field by periodic quadrature.

    Parameters
    ----------
    values : numpy.ndarray
        Complex samples on the grid of :func:`grid_axes`.
    halfwidth : float or sequence
        Box half-widths per axis.
    """
    shape = values.shape
    dv = _cell_volume(shape, halfwidth)
    xs = _mesh(shape, halfwidth)
    dens = np.abs(values) ** 2
    r2 = sum(x * x for x in xs)
    grads = spectral_gradient(values, halfwidth)
    mass = float(np.sum(dens) * dv)
    kin = float(sum(np.sum(np.abs(g) ** 2) for g in grads) * dv)
    pot = float(np.sum(r2 * dens) * dv)
    quart = float(np.sum(dens ** 2) * dv)
    E = 0.5 * p.mu * (kin + pot) + 0.25 * p.lam * quart
    if len(shape) == 2:
        vir = float(np.imag(np.sum(sum(x * g for x, g in zip(xs, grads)) * np.conj(values)) * dv))
        mom = (E - p.mu * pot) ** 2 + p.mu ** 2 * vir ** 2
        P = [float(np.imag(np.sum(g * np.conj(values)) * dv)) for g in grads]
        C = [float(np.sum(x * dens) * dv) for x in xs]
        nonrad = tuple(0.25 * (pj ** 2 + cj ** 2) for pj, cj in zip(P, C))
    else:
        mom = float("nan")
        nonrad = tuple([float("nan")] * len(shape))
    return ObservableRecord(t, mass, E, mom, nonrad)


def pohozaev_check(values: np.ndarray, halfwidth) -> float:
    """Relative residual of the dilation identity on a grid.

    For a decaying field ``f`` in ``d`` dimensions,
    ``Re int Delta f conj(d/2 f + x.grad f) = -int |grad f|^2``.
    Returns ``|lhs - rhs| / |rhs|``.
    """
    shape = values.shape
    d = len(shape)
    dv = _cell_volume(shape, halfwidth)
    xs = _mesh(shape, halfwidth)
    ks = grid_wavenumbers(shape, halfwidth)
    k2 = sum(k * k for k in np.meshgrid(*ks, indexing="ij"))
    lap = np.fft.ifftn(-k2 * np.fft.fftn(values))
    grads = spectral_gradient(values, halfwidth)
    dil = 0.5 * d * values + sum(x * g for x, g in zip(xs, grads))
    lhs = float(np.real(np.sum(lap * np.conj(dil)) * dv))
    rhs = -float(sum(np.sum(np.abs(g) ** 2) for g in grads) * dv)
    return abs(lhs - rhs) / abs(rhs)


def relative_drift(value: float, reference: float) -> float:
    """``|value - reference| / |reference|``, absolute when the reference is 0,
    floored at :data:`DRIFT_FLOOR`."""
    if not (np.isfinite(value) and np.isfinite(reference)):
        return float("nan")
    diff = abs(value - reference)
    out = diff / abs(reference) if reference != 0 else diff
    return max(out, DRIFT_FLOOR)
