import numpy as np
import pytest

from nlsbubbles.bubble import Bubble, BubbleEnsemble


def random_bubble(rng, d=2, amp=(0.5, 2.0), width=(0.6, 1.4), chirp=2.0, centre=2.0, momentum=2.0):
    """Random Gaussian bubble with bounded parameters."""
    A = rng.uniform(*amp) * rng.choice([-1.0, 1.0])
    return Bubble.gaussian(A, rng.uniform(*width), rng.uniform(-chirp, chirp),
                           rng.uniform(-centre, centre, d), rng.uniform(-momentum, momentum, d),
                           rng.uniform(-np.pi, np.pi))


def random_ensemble(rng, n=3, d=2, **kw):
    return BubbleEnsemble.of(random_bubble(rng, d, **kw) for _ in range(n))


class Quadrature:
    """Uniform tensor grid on ``[-h, h)^2`` used as an integration oracle."""

    def __init__(self, n=512, half=15.0):
        x = -half + np.arange(n) * (2 * half / n)
        self.dv = (2 * half / n) ** 2
        XX, YY = np.meshgrid(x, x, indexing="ij")
        self.points = np.stack([XX, YY], axis=-1)

    def inner(self, f, g):
        return complex(np.sum(f * np.conj(g)) * self.dv)

    def basis(self, b):
        """Basis fields of a Gaussian bubble: envelope, linear, quadratic."""
        unit = Bubble.gaussian(b.L, b.L, b.B, b.X, b.beta, b.gamma)  # A/L = 1
        b0 = unit.evaluate(self.points)
        y = (self.points - b.X) / b.L
        return [b0] + [y[..., i] * b0 for i in range(b.d)] + [np.sum(y * y, axis=-1) * b0]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def quad():
    return Quadrature()
