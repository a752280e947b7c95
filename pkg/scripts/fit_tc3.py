"""Regenerate the bundled nine-bubble decomposition of test case 3.

The target modulus is ``sqrt(M^2 - |x|^2)`` on the disk ``|x| < M`` with
``M = 4`` (zero outside).  The decomposition uses one central Gaussian and a
ring of eight Gaussians at radius ``R``.  For given widths and radius the
nine amplitudes are the linear least-squares fit of the modulus on a grid;
the two widths and the radius are then tuned by Nelder-Mead on the fit
residual.  The phase ``cosh|x| ~ 1 + |x|^2/2`` is attached by expanding it
around each centre.

Usage::

    python scripts/fit_tc3.py [--out src/nlsbubbles/data/tc3_bubbles.yaml]
"""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from nlsbubbles.bubble import Bubble, BubbleEnsemble
from nlsbubbles.config import dump_config
from nlsbubbles.observables import bubble_mass

logger = logging.getLogger("fit_tc3")

M = 4.0
N_RING = 8


def target(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.sqrt(np.clip(M * M - x * x - y * y, 0.0, None))


def centres(radius: float) -> np.ndarray:
    ang = 2 * np.pi * np.arange(N_RING) / N_RING
    ring = radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return np.vstack([[0.0, 0.0], ring])


def design(params, x, y):
    Lc, Lr, R = params
    C = centres(R)
    widths = np.array([Lc] + [Lr] * N_RING)
    cols = [np.exp(-((x - c[0]) ** 2 + (y - c[1]) ** 2) / (2 * L * L)) / L
            for c, L in zip(C, widths)]
    return np.stack([c.ravel() for c in cols], axis=1), C, widths


def fit(n: int = 121, half: float = 6.0):
    g = np.linspace(-half, half, n)
    x, y = np.meshgrid(g, g, indexing="ij")
    rhs = target(x, y).ravel()

    def residual(p):
        if min(p) <= 0.2:
            return 1e6
        D, _, _ = design(p, x, y)
        amp, *_ = np.linalg.lstsq(D, rhs, rcond=None)
        return float(np.sum((D @ amp - rhs) ** 2))

    res = minimize(residual, x0=[1.6, 1.2, 2.4], method="Nelder-Mead",
                   options={"xatol": 1e-6, "fatol": 1e-10, "maxiter": 4000})
    D, C, widths = design(res.x, x, y)
    amp, *_ = np.linalg.lstsq(D, rhs, rcond=None)
    logger.info("widths centre %.4f ring %.4f radius %.4f", *res.x)
    return amp, widths, C


def build_ensemble(amp, widths, C) -> BubbleEnsemble:
    return BubbleEnsemble.of(
        Bubble.gaussian(A=float(a), L=float(L), B=-2 * float(L) ** 2, X=c, beta=c,
                        gamma=1 + 0.5 * float(c @ c))
        for a, L, c in zip(amp, widths, C))


def main() -> None:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    default = Path(__file__).resolve().parents[1] / "src" / "nlsbubbles" / "data" / "tc3_bubbles.yaml"
    ap.add_argument("--out", type=Path, default=default)
    args = ap.parse_args()
    amp, widths, C = fit()
    e = build_ensemble(np.round(amp, 12), np.round(widths, 12), np.round(C, 12))
    mass = bubble_mass(e)
    logger.info("mass %.6f vs disk mass %.6f (ratio %.4f)", mass, np.pi * M ** 4 / 2,
                mass / (np.pi * M ** 4 / 2))
    dump_config(args.out, e, run={"testcase": "3"})
    logger.info("wrote %s", args.out)


if __name__ == "__main__":
    main()
