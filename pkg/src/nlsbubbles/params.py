"""Array view of a bubble ensemble.

Most numerical kernels work on all bubbles at once, so they take the frame
parameters as stacked numpy arrays rather than lists of :class:`Bubble`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bubble import Bubble, BubbleEnsemble, HermiteSpectrum


@dataclass(frozen=True, eq=False)
class FrameArrays:
    """Stacked frame parameters for ``N`` bubbles in dimension ``d``.

    Attributes
    ----------
    A, L, B, gamma : numpy.ndarray
        Shape ``(N,)``.
    X, beta : numpy.ndarray
        Shape ``(N, d)``.
    """

    A: np.ndarray
    L: np.ndarray
    B: np.ndarray
    X: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @classmethod
    def from_ensemble(cls, e: BubbleEnsemble | Bubble, *, canonical: bool = True) -> "FrameArrays":
        """Stack the frames of an ensemble.

        With ``canonical=True`` every bubble must be a pure Gaussian and its
        ground coefficient is folded into ``A`` and ``gamma`` so that the
        arrays describe ``(A/L) exp(i Gamma - |y|^2/2)`` bubbles.
        """
        if isinstance(e, Bubble):
            e = BubbleEnsemble((e,))
        if canonical:
            e = e.canonical_gaussian()
        bs = e.bubbles
        return cls(
            A=np.array([b.A for b in bs]),
            L=np.array([b.L for b in bs]),
            B=np.array([b.B for b in bs]),
            X=np.array([b.X for b in bs]).reshape(len(bs), e.d),
            beta=np.array([b.beta for b in bs]).reshape(len(bs), e.d),
            gamma=np.array([b.gamma for b in bs]),
        )

    def to_ensemble(self, s: np.ndarray | None = None) -> BubbleEnsemble:
        """Canonical Gaussian ensemble with these frames."""
        s = np.zeros(self.n) if s is None else s
        spec = HermiteSpectrum.gaussian(self.d)
        return BubbleEnsemble(tuple(
            Bubble(self.A[j], self.L[j], self.B[j], self.X[j], self.beta[j],
                   self.gamma[j], spec, s[j])
            for j in range(self.n)))

    def pack(self) -> np.ndarray:
        """Flatten into one real vector ``[A, L, B, X, beta, gamma]``."""
        return np.concatenate([self.A, self.L, self.B, self.X.ravel(),
                               self.beta.ravel(), self.gamma])

    @classmethod
    def unpack(cls, y: np.ndarray, n: int, d: int) -> "FrameArrays":
        i = 0
        parts = []
        for size in (n, n, n, n * d, n * d, n):
            parts.append(y[i:i + size])
            i += size
        return cls(parts[0], parts[1], parts[2], parts[3].reshape(n, d),
                   parts[4].reshape(n, d), parts[5])
