"""YAML configuration files for runs and bubble ensembles.

A configuration has two optional sections::

    run:
      method: bubbles        # bubbles | spectral | both
      testcase: "1"          # 1 | 2 | 3 | custom
      d: 2
      dt: 0.001
      t_final: 1.0
      mu: 1.0
      lambda: 1.0
      nx: 128
      ny: 129
      halfwidth: 15.0
      svd_rtol: 1.0e-10
      out: runs/tc1
      stride: 1
    bubbles:
      - A: 3.14159
        L: 1.0
        B: 0.0
        X: [0.0, 2.0]
        beta: [0.0, 0.0]
        gamma: 0.0
        s: 0.0                       # optional internal time
        hermite: [[0, 0, 1.77245, 0.0]]  # optional, rows [n..., re, im]

Omitting ``hermite`` gives the canonical Gaussian profile.  Unknown keys are
rejected with an error naming them.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import yaml

from .bubble import Bubble, BubbleEnsemble, HermiteSpectrum, spectrum_from_entries, spectrum_to_entries

RUN_KEYS = {"method", "testcase", "d", "dt", "t_final", "mu", "lambda", "nx", "ny",
            "halfwidth", "svd_rtol", "out", "stride"}
BUBBLE_KEYS = {"A", "L", "B", "X", "beta", "gamma", "s", "hermite"}
REQUIRED_BUBBLE_KEYS = {"A", "L", "B", "X", "beta", "gamma"}


class ConfigError(ValueError):
    """Raised for malformed configuration documents."""


def bubble_from_record(rec: dict[str, Any], index: int = 0) -> Bubble:
    """Build a bubble from one ``bubbles`` entry."""
    if not isinstance(rec, dict):
        raise ConfigError(f"bubbles[{index}] must be a mapping")
    unknown = set(rec) - BUBBLE_KEYS
    if unknown:
        raise ConfigError(f"bubbles[{index}] has unknown keys: {sorted(unknown)}")
    missing = REQUIRED_BUBBLE_KEYS - set(rec)
    if missing:
        raise ConfigError(f"bubbles[{index}] is missing keys: {sorted(missing)}")
    X = list(rec["X"])
    d = len(X)
    try:
        if "hermite" in rec and rec["hermite"] is not None:
            spec = spectrum_from_entries(d, rec["hermite"])
        else:
            spec = HermiteSpectrum.gaussian(d)
        return Bubble(float(rec["A"]), float(rec["L"]), float(rec["B"]), X, rec["beta"],
                      float(rec["gamma"]), spec, float(rec.get("s", 0.0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bubbles[{index}]: {exc}") from exc


def bubble_to_record(b: Bubble) -> dict[str, Any]:
    return {
        "A": float(b.A), "L": float(b.L), "B": float(b.B),
        "X": [float(v) for v in b.X], "beta": [float(v) for v in b.beta],
        "gamma": float(b.gamma), "s": float(b.s),
        "hermite": spectrum_to_entries(b.spectrum),
    }


def parse_config(doc: dict[str, Any] | None) -> tuple[dict[str, Any], BubbleEnsemble | None]:
    """Validate a parsed document and split it into run settings and bubbles."""
    doc = doc or {}
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a mapping with 'run' and/or 'bubbles'")
    unknown = set(doc) - {"run", "bubbles"}
    if unknown:
        raise ConfigError(f"unknown top-level sections: {sorted(unknown)}")
    run = doc.get("run") or {}
    if not isinstance(run, dict):
        raise ConfigError("'run' must be a mapping")
    bad = set(run) - RUN_KEYS
    if bad:
        raise ConfigError(f"run section has unknown keys: {sorted(bad)}")
    recs = doc.get("bubbles")
    ens = None
    if recs:
        if not isinstance(recs, list):
            raise ConfigError("'bubbles' must be a list")
        try:
            ens = BubbleEnsemble.of(bubble_from_record(r, i) for i, r in enumerate(recs))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return dict(run), ens


def load_config(path: str | Path) -> tuple[dict[str, Any], BubbleEnsemble | None]:
    """Read a YAML configuration file."""
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    return parse_config(doc)


def dump_config(path: str | Path, e: BubbleEnsemble | None, run: dict[str, Any] | None = None) -> None:
    """Write run settings and bubbles in the format read by :func:`load_config`."""
    doc: dict[str, Any] = {}
    if run:
        doc["run"] = dict(run)
    if e is not None:
        doc["bubbles"] = [bubble_to_record(b) for b in e]
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False, default_flow_style=None)
