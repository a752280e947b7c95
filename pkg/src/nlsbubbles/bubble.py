"""Bubble representation: Hermite-spectrum profiles under a Gaussian frame.

A bubble is the field

    u(x) = (A / L) * exp(i*gamma + i*L*beta.y - i*(B/4)*|y|^2) * v(y),
    y = (x - X) / L,

where ``v`` is a finite combination of orthonormal Hermite functions.  The
frame parameters ``(A, L, B, X, beta, gamma)`` carry the motion of the bubble
and the spectrum carries its shape.  The canonical Gaussian bubble has
``v(y) = exp(-|y|^2 / 2)``, which in the orthonormal basis is the single
coefficient ``pi**(d/4)`` on the ground state.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)

MultiIndex = tuple[int, ...]


def hermite_functions(kmax: int, z: np.ndarray) -> np.ndarray:
    """Evaluate the orthonormal Hermite functions H_0 .. H_kmax.

    Uses the three-term recurrence on the normalized functions, which is
    stable for large orders and avoids factorials.

    Parameters
    ----------
    kmax : int
        Highest order to evaluate (inclusive), ``kmax >= 0``.
    z : array_like
        Real evaluation points of any shape.

    Returns
    -------
    numpy.ndarray
        Array of shape ``(kmax + 1,) + z.shape``.
    """
    if kmax < 0:
        raise ValueError(f"kmax must be non-negative, got {kmax}")
    z = np.asarray(z, dtype=float)
    out = np.empty((kmax + 1,) + z.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * z * z)
    if kmax >= 1:
        out[1] = np.sqrt(2.0) * z * out[0]
    for k in range(1, kmax):
        out[k + 1] = (np.sqrt(2.0 / (k + 1)) * z * out[k]
                      - np.sqrt(k / (k + 1)) * out[k - 1])
    return out


def hermite_function(k: int, z) -> np.ndarray:
    """Orthonormal Hermite function of order ``k`` at ``z``.

    ``H_k(z) = (2^k k! sqrt(pi))^{-1/2} h_k(z) exp(-z^2/2)`` with ``h_k`` the
    physicists' polynomial.
    """
    return hermite_functions(k, z)[k]


@dataclass(frozen=True)
class HermiteSpectrum:
    """Sparse Hermite expansion ``v = sum_n c_n phi_n``.

    Attributes
    ----------
    d : int
        Spatial dimension.
    coeffs : Mapping[tuple[int, ...], complex]
        Map from multi-index ``n`` (length ``d``) to coefficient.  Zero
        entries are dropped on construction.
    """

    d: int
    coeffs: Mapping[MultiIndex, complex] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        clean: dict[MultiIndex, complex] = {}
        for n, c in dict(self.coeffs).items():
            n = tuple(int(k) for k in n)
            if len(n) != self.d:
                raise ValueError(f"multi-index {n} does not have length {self.d}")
            if any(k < 0 for k in n):
                raise ValueError(f"multi-index {n} has a negative entry")
            c = complex(c)
            if not np.isfinite(c):
                raise ValueError(f"coefficient for {n} is not finite")
            if c != 0:
                clean[n] = clean.get(n, 0) + c
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def gaussian(cls, d: int, coefficient: complex = 1.0) -> "HermiteSpectrum":
        """Spectrum of ``coefficient * exp(-|y|^2/2)``."""
        return cls(d, {(0,) * d: coefficient * np.pi ** (d / 4)})

    @property
    def max_order(self) -> int:
        """Largest single-axis order appearing in the spectrum."""
        return max((max(n) for n in self.coeffs), default=0)

    def is_gaussian(self) -> bool:
        """True when the only nonzero coefficient sits on the ground state."""
        return len(self.coeffs) == 1 and (0,) * self.d in self.coeffs

    def ground_coefficient(self) -> complex:
        return self.coeffs.get((0,) * self.d, 0j)

    def advance(self, ds: float) -> "HermiteSpectrum":
        """Apply the oscillator phase ``exp(-i(2|n| + d) ds)`` to every mode."""
        return HermiteSpectrum(self.d, {
            n: c * np.exp(-1j * (2 * sum(n) + self.d) * ds)
            for n, c in self.coeffs.items()
        })

    def evaluate(self, y: np.ndarray) -> np.ndarray:
        """Evaluate ``v`` at points ``y`` of shape ``(..., d)``."""
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.d:
            raise ValueError(f"points have trailing size {y.shape[-1]}, expected {self.d}")
        if not self.coeffs:
            return np.zeros(y.shape[:-1], dtype=complex)
        tables = [hermite_functions(self.max_order, y[..., i]) for i in range(self.d)]
        out = np.zeros(y.shape[:-1], dtype=complex)
        for n, c in self.coeffs.items():
            term = np.full(y.shape[:-1], c, dtype=complex)
            for i, k in enumerate(n):
                term = term * tables[i][k]
            out += term
        return out

    def norm_squared(self) -> float:
        return float(sum(abs(c) ** 2 for c in self.coeffs.values()))


def _as_vector(v, d: int | None, name: str) -> np.ndarray:
    arr = np.array(v, dtype=float).reshape(-1)
    if d is not None and arr.size != d:
        raise ValueError(f"{name} has length {arr.size}, expected {d}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Bubble:
    """One localized component of the field.

    Attributes
    ----------
    A : float
        Real amplitude.
    L : float
        Width, strictly positive.
    B : float
        Chirp.
    X : numpy.ndarray
        Centre, shape ``(d,)``.
    beta : numpy.ndarray
        Momentum, shape ``(d,)``.
    gamma : float
        Global phase.
    spectrum : HermiteSpectrum
        Profile in the rescaled frame.
    s : float
        Internal oscillator time accumulated by the exact linear flow.
    """

    A: float
    L: float
    B: float
    X: np.ndarray
    beta: np.ndarray
    gamma: float
    spectrum: HermiteSpectrum
    s: float = 0.0

    def __post_init__(self) -> None:
        X = _as_vector(self.X, None, "X")
        d = X.size
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "beta", _as_vector(self.beta, d, "beta"))
        for name in ("A", "L", "B", "gamma", "s"):
            val = float(getattr(self, name))
            if not np.isfinite(val):
                raise ValueError(f"{name} is not finite")
            object.__setattr__(self, name, val)
        if self.L <= 0:
            raise ValueError(f"width L must be positive, got {self.L}")
        if self.spectrum.d != d:
            raise ValueError(f"spectrum dimension {self.spectrum.d} does not match X ({d})")

    @classmethod
    def gaussian(cls, A: float, L: float, B: float, X: Sequence[float],
                 beta: Sequence[float] | None = None, gamma: float = 0.0,
                 s: float = 0.0) -> "Bubble":
        """Bubble with the profile ``exp(-|y|^2/2)``."""
        X = np.asarray(X, dtype=float).reshape(-1)
        if beta is None:
            beta = np.zeros_like(X)
        return cls(A, L, B, X, beta, gamma, HermiteSpectrum.gaussian(X.size), s)

    @property
    def d(self) -> int:
        return self.X.size

    def replace(self, **changes) -> "Bubble":
        return replace(self, **changes)

    def is_gaussian(self) -> bool:
        return self.spectrum.is_gaussian()

    def canonical_gaussian(self) -> "Bubble":
        """Fold a single ground-state coefficient into ``A`` and ``gamma``.

        The exact linear flow multiplies the ground coefficient by a phase, so
        a Gaussian bubble drifts away from the canonical coefficient
        ``pi**(d/4)``.  Writing ``c = |c| e^{i arg c}`` the same field is
        described by ``A |c| pi^{-d/4}`` and ``gamma + arg c`` with the
        canonical spectrum.
        """
        if not self.is_gaussian():
            raise ValueError("bubble profile is not a pure Gaussian")
        c = self.spectrum.ground_coefficient()
        if c == HermiteSpectrum.gaussian(self.d).ground_coefficient():
            return self
        scale = abs(c) * np.pi ** (-self.d / 4)
        return replace(self, A=self.A * scale, gamma=self.gamma + float(np.angle(c)),
                       spectrum=HermiteSpectrum.gaussian(self.d))

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return evaluate_bubble(self, x)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Bubble):
            return NotImplemented
        return (self.A == other.A and self.L == other.L and self.B == other.B
                and np.array_equal(self.X, other.X)
                and np.array_equal(self.beta, other.beta)
                and self.gamma == other.gamma and self.s == other.s
                and self.spectrum == other.spectrum)

    __hash__ = None  # type: ignore[assignment]


def evaluate_bubble(b: Bubble, x: np.ndarray) -> np.ndarray:
    """Evaluate one bubble at points ``x`` of shape ``(..., d)``.

    A single point may be passed as a length-``d`` vector, in which case a
    complex scalar is returned.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    if scalar:
        x = x[None, :]
    if x.shape[-1] != b.d:
        raise ValueError(f"points have trailing size {x.shape[-1]}, expected {b.d}")
    y = (x - b.X) / b.L
    phase = b.gamma + b.L * (y @ b.beta) - 0.25 * b.B * np.sum(y * y, axis=-1)
    out = (b.A / b.L) * np.exp(1j * phase) * b.spectrum.evaluate(y)
    return complex(out[0]) if scalar else out


@dataclass(frozen=True)
class BubbleEnsemble:
    """Ordered collection of bubbles sharing one dimension."""

    bubbles: tuple[Bubble, ...]

    def __post_init__(self) -> None:
        bubbles = tuple(self.bubbles)
        if not bubbles:
            raise ValueError("an ensemble needs at least one bubble")
        dims = {b.d for b in bubbles}
        if len(dims) != 1:
            raise ValueError(f"bubbles have mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "bubbles", bubbles)

    @classmethod
    def of(cls, bubbles: Iterable[Bubble]) -> "BubbleEnsemble":
        return cls(tuple(bubbles))

    @property
    def d(self) -> int:
        return self.bubbles[0].d

    def __len__(self) -> int:
        return len(self.bubbles)

    def __iter__(self) -> Iterator[Bubble]:
        return iter(self.bubbles)

    def __getitem__(self, i: int) -> Bubble:
        return self.bubbles[i]

    def is_gaussian(self) -> bool:
        return all(b.is_gaussian() for b in self.bubbles)

    def canonical_gaussian(self) -> "BubbleEnsemble":
        return BubbleEnsemble(tuple(b.canonical_gaussian() for b in self.bubbles))

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Superposition of all bubbles at ``x``."""
        out = evaluate_bubble(self.bubbles[0], x)
        for b in self.bubbles[1:]:
            out = out + evaluate_bubble(b, x)
        return out


def spectrum_from_entries(d: int, entries: Iterable[Sequence[float]]) -> HermiteSpectrum:
    """Build a spectrum from rows ``[n_1, ..., n_d, re, im]``."""
    coeffs: dict[MultiIndex, complex] = {}
    for row in entries:
        row = list(row)
        if len(row) != d + 2:
            raise ValueError(f"hermite entry {row} should have {d + 2} numbers")
        n = tuple(int(k) for k in row[:d])
        if any(float(k) != int(k) for k in row[:d]):
            raise ValueError(f"hermite index in {row} is not an integer")
        coeffs[n] = coeffs.get(n, 0) + complex(float(row[d]), float(row[d + 1]))
    return HermiteSpectrum(d, coeffs)


def spectrum_to_entries(spec: HermiteSpectrum) -> list[list[float]]:
    return [[*n, float(c.real), float(c.imag)] for n, c in sorted(spec.coeffs.items())]
