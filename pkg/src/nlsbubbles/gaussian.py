"""Closed-form Gaussian integrals for bubble inner products.

Every inner product between Gaussian bubbles, and every projection of the
cubic term onto the bubble basis, reduces to a polynomial moment of a complex
Gaussian under a Fourier phase:

    I[p] = C * int p(x) exp(-i xi.x) exp(-z |x|^2 + a.x) dx,

with ``Re z > 0``.  Writing ``q = xi + i a`` the base transform is
``(pi/z)^{d/2} exp(-q.q / (4z))`` (principal branch, ``q.q`` without
conjugation) and the polynomial moments follow by differentiation.

The basis attached to bubble ``j`` is

    b_{j,0} = exp(i Gamma_j - |y_j|^2 / 2),
    b_{j,1+n} = (y_j)_n b_{j,0},   n = 0 .. d-1,
    b_{j,d+1} = |y_j|^2 b_{j,0},

with ``y_j = (x - X_j)/L_j`` and ``Gamma_j`` the bubble phase.  Indices are
zero-based throughout.

Prefactors ``C`` are carried as logarithms and merged with the transform
exponent before exponentiating, so widely separated bubbles underflow to
zero cleanly rather than producing ``0 * inf``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bubble import Bubble, BubbleEnsemble
from .params import FrameArrays

MOMENTS = ("1", "x", "xx", "|x|^2", "x|x|^2", "x^3", "x x^2", "x^4", "x^2 x^2", "|x|^4")


def _prepare(z, a, xi):
    z = np.asarray(z, dtype=complex)
    a = np.asarray(a, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if np.any(z.real <= 0):
        raise ValueError("Gaussian kernel needs Re z > 0")
    q = xi + 1j * a
    return z, q


def _base(z, q, log_prefactor=0.0):
    d = q.shape[-1]
    qq = np.sum(q * q, axis=-1)
    return np.power(np.pi / z, d / 2) * np.exp(log_prefactor - qq / (4 * z))


def ft_one(z, a, xi, log_prefactor=0.0):
    """Transform of the bare Gaussian, times ``exp(log_prefactor)``."""
    z, q = _prepare(z, a, xi)
    return _base(z, q, log_prefactor)


def ft_x(z, a, xi, log_prefactor=0.0):
    """Transforms of ``x_m f`` for all ``m``, trailing axis ``m``."""
    z, q = _prepare(z, a, xi)
    f = _base(z, q, log_prefactor)
    return (-1j * q / (2 * z[..., None])) * f[..., None]


def ft_xx(z, a, xi, log_prefactor=0.0):
    """Transforms of ``x_m x_n f``, trailing axes ``(m, n)``."""
    z, q = _prepare(z, a, xi)
    f = _base(z, q, log_prefactor)
    z2 = z[..., None, None]
    out = -(q[..., :, None] * q[..., None, :]) / (4 * z2 * z2)
    diag = (1 / (2 * z[..., None])) * (1 - q * q / (2 * z[..., None]))
    d = q.shape[-1]
    idx = np.arange(d)
    out[..., idx, idx] = diag
    return out * f[..., None, None]


def ft_r2(z, a, xi, log_prefactor=0.0):
    """Transform of ``|x|^2 f``."""
    z, q = _prepare(z, a, xi)
    f = _base(z, q, log_prefactor)
    d = q.shape[-1]
    qq = np.sum(q * q, axis=-1)
    return (1 / (2 * z)) * (d - qq / (2 * z)) * f


def ft_x_r2(z, a, xi, log_prefactor=0.0):
    """Transforms of ``x_m |x|^2 f``, trailing axis ``m``."""
    z, q = _prepare(z, a, xi)
    f = _base(z, q, log_prefactor)
    d = q.shape[-1]
    qq = np.sum(q * q, axis=-1)
    fac = (-1j / (4 * z * z)) * (d + 2 - qq / (2 * z)) * f
    return q * fac[..., None]


def ft_x3(z, a, xi, log_prefactor=0.0):
    """Transforms of ``x_m^3 f``, trailing axis ``m``."""
    z, q = _prepare(z, a, xi)
    f = _base(z, q, log_prefactor)
    zz = z[..., None]
    return (-1j / (4 * zz * zz)) * (3 * q - q ** 3 / (2 * zz)) * f[..., None]


def ft_x_x2(z, a, xi, log_prefactor=0.0):
    """Transforms of ``x_m x_n^2 f`` for ``m != n``, trailing axes ``(m, n)``.

    Diagonal entries are left as NaN; use :func:`ft_x3` there.
    """
    z, q = _prepare(z, a, xi)
    f = _base(z, q, log_prefactor)
    z2 = z[..., None, None]
    qm = q[..., :, None]
    qn = q[..., None, :]
    out = (-1j / (2 * z2)) * (1 - qn * qn / (2 * z2)) * qm / (2 * z2) * f[..., None, None]
    d = q.shape[-1]
    out[..., np.arange(d), np.arange(d)] = np.nan
    return out


def ft_x4(z, a, xi, log_prefactor=0.0):
    """Transforms of ``x_m^4 f``, trailing axis ``m``."""
    z, q = _prepare(z, a, xi)
    f = _base(z, q, log_prefactor)
    zz = z[..., None]
    q2 = q * q
    return (1 / (4 * zz * zz)) * (3 - 6 * q2 / (2 * zz) + q2 * q2 / (4 * zz * zz)) * f[..., None]


def ft_x2x2(z, a, xi, log_prefactor=0.0):
    """Transforms of ``x_m^2 x_n^2 f`` for ``m != n``; diagonal is NaN."""
    z, q = _prepare(z, a, xi)
    f = _base(z, q, log_prefactor)
    z2 = z[..., None, None]
    q2 = q * q
    out = ((1 / (4 * z2 * z2)) * (1 - q2[..., None, :] / (2 * z2))
           * (1 - q2[..., :, None] / (2 * z2)) * f[..., None, None])
    d = q.shape[-1]
    out[..., np.arange(d), np.arange(d)] = np.nan
    return out


def ft_r4(z, a, xi, log_prefactor=0.0):
    """Transform of ``|x|^4 f`` as the sum of quartic and mixed terms."""
    total = np.sum(ft_x4(z, a, xi, log_prefactor), axis=-1)
    d = np.shape(a)[-1]
    if d > 1:
        mixed = ft_x2x2(z, a, xi, log_prefactor)
        total = total + np.nansum(mixed, axis=(-2, -1))
    return total


def gaussian_moment(z, a, xi, moment: str = "1", m: int | None = None,
                    n: int | None = None):
    """Fourier transform of a polynomial times a complex Gaussian.

    Evaluates ``int p(x) exp(-i xi.x - z|x|^2 + a.x) dx``.

    Parameters
    ----------
    z : complex or array_like
        Gaussian coefficient with positive real part.
    a, xi : array_like
        Real shift and frequency vectors, trailing axis of length ``d``.
    moment : str
        One of ``"1"``, ``"x"``, ``"xx"``, ``"|x|^2"``, ``"x|x|^2"``,
        ``"x^3"``, ``"x x^2"``, ``"x^4"``, ``"x^2 x^2"``, ``"|x|^4"``.
    m, n : int, optional
        Zero-based axis indices for the vector and matrix moments.  When
        omitted the full trailing axes are returned.
    """
    table = {
        "1": ft_one, "x": ft_x, "xx": ft_xx, "|x|^2": ft_r2, "x|x|^2": ft_x_r2,
        "x^3": ft_x3, "x x^2": ft_x_x2, "x^4": ft_x4, "x^2 x^2": ft_x2x2, "|x|^4": ft_r4,
    }
    if moment not in table:
        raise ValueError(f"unknown moment {moment!r}; expected one of {MOMENTS}")
    out = table[moment](z, a, xi)
    if moment in ("x", "x|x|^2", "x^3", "x^4"):
        return out if m is None else out[..., m]
    if moment in ("xx", "x x^2", "x^2 x^2"):
        if m is None or n is None:
            return out
        if moment != "xx" and m == n:
            raise ValueError(f"moment {moment!r} is defined for m != n only")
        return out[..., m, n]
    return out


@dataclass(frozen=True, eq=False)
class GaussianKernel:
    """Parameters of one (or an array of) Gaussian integrals.

    ``log_c`` is the complex logarithm of the prefactor ``C``.
    """

    z: np.ndarray
    a: np.ndarray
    xi: np.ndarray
    log_c: np.ndarray

    @property
    def C(self) -> np.ndarray:
        return np.exp(self.log_c)

    def moment(self, kind: str = "1"):
        """Prefactor times the transform, e.g. ``kind="x"`` for ``C * x_m f``."""
        fn = {"1": ft_one, "x": ft_x, "xx": ft_xx, "|x|^2": ft_r2, "x|x|^2": ft_x_r2,
              "|x|^4": ft_r4}[kind]
        return fn(self.z, self.a, self.xi, self.log_c)


def pair_kernels(P: FrameArrays) -> GaussianKernel:
    """Kernels for all ordered pairs, array axes ``(l, j)``.

    ``<b_{l,0}, b_{j,0}>`` equals ``C f_hat(xi)`` for the kernel at ``[l, j]``.
    """
    inv_l2 = 1.0 / P.L ** 2
    cz = (2 + 1j * P.B) * inv_l2 / 4  # per-bubble complex width coefficient
    z = cz[:, None] + np.conj(cz)[None, :]
    XoL = P.X * inv_l2[:, None]
    a = XoL[:, None, :] + XoL[None, :, :]
    chirp = (0.5 * P.B * inv_l2)[:, None] * P.X + P.beta
    xi = chirp[None, :, :] - chirp[:, None, :]
    r2 = np.sum(P.X ** 2, axis=1)
    bx = np.sum(P.beta * P.X, axis=1)
    lc_l = -cz * r2 - 1j * bx + 1j * P.gamma
    log_c = lc_l[:, None] + np.conj(lc_l)[None, :]
    return GaussianKernel(z, a, xi, log_c)


def pair_kernel(bl: Bubble, bj: Bubble) -> GaussianKernel:
    """Kernel for ``<b_l, b_j>`` between two Gaussian bubbles."""
    P = FrameArrays.from_ensemble(BubbleEnsemble((bl, bj)))
    k = pair_kernels(P)
    return GaussianKernel(k.z[0, 1], k.a[0, 1], k.xi[0, 1], k.log_c[0, 1])


def triple_kernels(P: FrameArrays) -> GaussianKernel:
    """Kernels for ``<u_k u_l conj(u_m), b_{j,0}>``, array axes ``(j, k, l, m)``.

    The prefactor includes the amplitudes ``A_k A_l A_m / (L_k L_l L_m)``.
    Bubbles with zero amplitude give ``log_c = -inf``.
    """
    inv_l2 = 1.0 / P.L ** 2
    c = 0.25 * P.B * inv_l2
    sgn = (-1, 1, 1, -1)  # conjugated factors: j and m
    n = P.n

    def grid(v, axis):
        shape = [1, 1, 1, 1] + list(np.shape(v)[1:])
        shape[axis] = n
        return np.reshape(v, shape)

    z = 0j
    a = 0.0
    xi = 0.0
    log_c = 0j
    chirp = (0.5 * P.B * inv_l2)[:, None] * P.X + P.beta
    r2 = np.sum(P.X ** 2, axis=1)
    bx = np.sum(P.beta * P.X, axis=1)
    with np.errstate(divide="ignore"):
        log_amp = np.log(np.abs(P.A) / P.L) + 1j * np.pi * (P.A < 0)
    for axis, s in enumerate(sgn):
        z = z + grid(0.5 * inv_l2 + 1j * s * c, axis)
        a = a + grid(P.X * inv_l2[:, None], axis)
        xi = xi - s * grid(chirp, axis)
        log_c = log_c + grid(-0.5 * r2 * inv_l2 + 1j * s * (P.gamma - bx - c * r2), axis)
        if axis > 0:
            log_c = log_c + grid(log_amp, axis)
    return GaussianKernel(z, a, xi, log_c)


def triple_kernel(bj: Bubble, bk: Bubble, bl: Bubble, bm: Bubble) -> GaussianKernel:
    """Kernel for ``<u_k u_l conj(u_m), b_{j,0}>`` with four named bubbles."""
    P = FrameArrays.from_ensemble(BubbleEnsemble((bj, bk, bl, bm)))
    k = triple_kernels(P)
    idx = (0, 1, 2, 3)
    return GaussianKernel(k.z[idx], k.a[idx], k.xi[idx], k.log_c[idx])


def gram_tensor(P: FrameArrays) -> np.ndarray:
    """All basis inner products, ``T[l, j, r, c] = <b_{l,r}, b_{j,c}>``."""
    k = pair_kernels(P)
    d = P.d
    N = P.n
    f = k.moment("1")
    fx = k.moment("x")
    fxx = k.moment("xx")
    fr2 = k.moment("|x|^2")
    fxr2 = k.moment("x|x|^2")
    fr4 = k.moment("|x|^4")

    Xl = P.X[:, None, :]
    Xj = P.X[None, :, :]
    r2l = np.sum(P.X ** 2, axis=1)[:, None]
    r2j = np.sum(P.X ** 2, axis=1)[None, :]
    Ll = P.L[:, None]
    Lj = P.L[None, :]
    Xl_fx = np.sum(Xl * fx, axis=-1)
    Xj_fx = np.sum(Xj * fx, axis=-1)

    T = np.empty((N, N, d + 2, d + 2), dtype=complex)
    T[:, :, 0, 0] = f
    # linear row against the envelope
    T[:, :, 1:d + 1, 0] = (fx - Xl * f[..., None]) / Ll[..., None]
    # quadratic row against the envelope
    T[:, :, d + 1, 0] = (fr2 - 2 * Xl_fx + r2l * f) / Ll ** 2
    # linear against linear: rows n (bubble l), columns m (bubble j)
    T[:, :, 1:d + 1, 1:d + 1] = (
        fxx - Xl[..., :, None] * fx[..., None, :] - Xj[..., None, :] * fx[..., :, None]
        + Xl[..., :, None] * Xj[..., None, :] * f[..., None, None]
    ) / (Ll * Lj)[..., None, None]
    # quadratic row against linear columns m
    Xl_fxx = np.einsum("ljn,ljnm->ljm", np.broadcast_to(Xl, fx.shape), fxx)
    T[:, :, d + 1, 1:d + 1] = (
        fxr2 - 2 * Xl_fxx + r2l[..., None] * fx - Xj * fr2[..., None]
        + 2 * Xj * Xl_fx[..., None] - r2l[..., None] * Xj * f[..., None]
    ) / (Ll ** 2 * Lj)[..., None]
    # quadratic against quadratic
    XlXj_fxx = np.einsum("ljn,ljm,ljnm->lj", np.broadcast_to(Xl, fx.shape),
                         np.broadcast_to(Xj, fx.shape), fxx)
    T[:, :, d + 1, d + 1] = (
        fr4 - 2 * np.sum(Xl * fxr2, axis=-1) + r2l * fr2 - 2 * np.sum(Xj * fxr2, axis=-1)
        + 4 * XlXj_fxx - 2 * r2l * Xj_fx + r2j * fr2 - 2 * r2j * Xl_fx + r2l * r2j * f
    ) / (Ll ** 2 * Lj ** 2)
    # remaining entries by conjugate symmetry <b_{l,r}, b_{j,c}> = conj <b_{j,c}, b_{l,r}>
    swapped = np.conj(np.swapaxes(T, 0, 1))
    T[:, :, 0, 1:] = swapped[:, :, 1:, 0]
    T[:, :, 1:d + 1, d + 1] = swapped[:, :, d + 1, 1:d + 1]
    return T


def gram_entry(bl: Bubble, bj: Bubble, row: int, col: int) -> complex:
    """Single inner product ``<b_{l,row}, b_{j,col}>`` (zero-based indices)."""
    P = FrameArrays.from_ensemble(BubbleEnsemble((bl, bj)))
    d = P.d
    if not (0 <= row <= d + 1 and 0 <= col <= d + 1):
        raise IndexError(f"basis index out of range 0..{d + 1}")
    return complex(gram_tensor(P)[0, 1, row, col])


def gram_matrix(P: FrameArrays | BubbleEnsemble) -> np.ndarray:
    """Gram matrix ``G[p, q] = <b_q, b_p>`` with ``p = j*(d+2) + c``.

    The result is Hermitian up to rounding and is symmetrized exactly.
    """
    if not isinstance(P, FrameArrays):
        P = FrameArrays.from_ensemble(P)
    T = gram_tensor(P)
    n = P.n * (P.d + 2)
    G = T.transpose(1, 3, 0, 2).reshape(n, n)
    return 0.5 * (G + G.conj().T)


def interaction_vector(P: FrameArrays | BubbleEnsemble) -> np.ndarray:
    """Projections ``<u|u|^2, b_{j,c}>`` of the cubic term, shape ``(N, d+2)``."""
    if not isinstance(P, FrameArrays):
        P = FrameArrays.from_ensemble(P)
    k = triple_kernels(P)
    f = k.moment("1")
    fx = k.moment("x")
    fr2 = k.moment("|x|^2")
    N, d = P.n, P.d
    Xj = P.X[:, None, None, None, :]
    S = np.empty((N, d + 2), dtype=complex)
    S[:, 0] = f.reshape(N, -1).sum(axis=1)
    lin = fx - Xj * f[..., None]
    S[:, 1:d + 1] = lin.reshape(N, -1, d).sum(axis=1) / P.L[:, None]
    quad = fr2 - 2 * np.sum(Xj * fx, axis=-1) + np.sum(P.X ** 2, axis=1)[:, None, None, None] * f
    S[:, d + 1] = quad.reshape(N, -1).sum(axis=1) / P.L ** 2
    return S


def interaction_entry(e: BubbleEnsemble, j: int, row: int) -> complex:
    """Single projection ``<u|u|^2, b_{j,row}>`` (zero-based indices)."""
    P = FrameArrays.from_ensemble(e)
    if not 0 <= j < P.n:
        raise IndexError(f"bubble index {j} out of range 0..{P.n - 1}")
    if not 0 <= row <= P.d + 1:
        raise IndexError(f"basis index out of range 0..{P.d + 1}")
    return complex(interaction_vector(P)[j, row])
