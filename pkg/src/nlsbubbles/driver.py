"""Time stepping, test-case presets and run output.

The bubble path uses Strang splitting: an exact half step of the oscillator
flow, one projected cubic step, and another exact half step.  The grid path
uses the same splitting with the spectral sub-steps.  Observables are
recorded every ``stride`` steps and written as CSV together with the final
states.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np
import yaml

from .bubble import Bubble, BubbleEnsemble
from .config import ConfigError, dump_config, parse_config
from .dfmp import StepDiagnostics, step_nonlinear
from .modulation import propagate_ensemble_linear
from .observables import (ObservableParams, ObservableRecord, bubble_observables,
                          grid_observables, relative_drift)
from .spectral import GridField, check_aliasing, strang_step

logger = logging.getLogger(__name__)

METHODS = ("bubbles", "spectral", "both")
TESTCASES = ("1", "2", "3", "custom")


@dataclass
class RunConfig:
    """Settings of one simulation run.

    ``lam`` is the cubic coupling (``lambda`` in files and on the command
    line).  ``bubbles`` overrides the test-case ensemble when given.
    """

    method: str = "bubbles"
    testcase: str = "1"
    d: int = 2
    dt: float = 1e-3
    t_final: float = 1.0
    mu: float = 1.0
    lam: float = 1.0
    nx: int = 128
    ny: int = 129
    halfwidth: float = 15.0
    svd_rtol: float = 1e-10
    out: str | None = "runs/out"
    stride: int = 1
    bubbles: BubbleEnsemble | None = None

    def validate(self) -> "RunConfig":
        self.testcase = str(self.testcase)
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.testcase not in TESTCASES:
            raise ConfigError(f"testcase must be one of {TESTCASES}, got {self.testcase!r}")
        if self.testcase == "custom" and self.bubbles is None:
            raise ConfigError("testcase 'custom' needs a bubbles section")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not (self.t_final >= 0 and math.isfinite(self.t_final)):
            raise ConfigError(f"t_final must be non-negative, got {self.t_final}")
        if int(self.stride) != self.stride or self.stride < 1:
            raise ConfigError(f"stride must be an integer >= 1, got {self.stride}")
        if self.d < 1:
            raise ConfigError(f"d must be >= 1, got {self.d}")
        if self.method != "bubbles" and self.d not in (1, 2):
            raise ConfigError(f"the grid solver supports d = 1 or 2, got d={self.d}")
        if self.nx < 8 or (self.d == 2 and self.ny < 8):
            raise ConfigError("nx and ny must be at least 8")
        if not self.halfwidth > 0:
            raise ConfigError(f"halfwidth must be positive, got {self.halfwidth}")
        if not self.svd_rtol > 0:
            raise ConfigError(f"svd_rtol must be positive, got {self.svd_rtol}")
        if self.bubbles is not None and self.bubbles.d != self.d:
            raise ConfigError(f"bubbles have dimension {self.bubbles.d} but d={self.d}")
        self.stride = int(self.stride)
        return self

    @classmethod
    def from_mapping(cls, run: dict, bubbles: BubbleEnsemble | None = None) -> "RunConfig":
        kw = {("lam" if k == "lambda" else k): v for k, v in run.items()}
        cfg = cls(**kw)
        if bubbles is not None:
            cfg.bubbles = bubbles
            cfg.d = bubbles.d
            if "testcase" not in run:
                cfg.testcase = "custom"
        return cfg

    def to_mapping(self) -> dict:
        return {"method": self.method, "testcase": self.testcase, "d": self.d,
                "dt": self.dt, "t_final": self.t_final, "mu": self.mu, "lambda": self.lam,
                "nx": self.nx, "ny": self.ny, "halfwidth": self.halfwidth,
                "svd_rtol": self.svd_rtol, "out": self.out, "stride": self.stride}

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return (self.nx, self.ny) if self.d == 2 else (self.nx,)

    @property
    def params(self) -> ObservableParams:
        return ObservableParams(self.mu, self.lam)


@dataclass(frozen=True)
class TestCase:
    """Bubble decomposition and exact initial field of a preset."""

    name: str
    ensemble: BubbleEnsemble
    initial: Callable[[np.ndarray], np.ndarray]


TestCase.__test__ = False  # keep pytest from collecting the dataclass


def _disk_profile(radius: float):
    def fn(x: np.ndarray) -> np.ndarray:
        r = np.sqrt(np.sum(x * x, axis=-1))
        amp = np.sqrt(np.clip(radius ** 2 - r * r, 0.0, None))
        return amp * np.exp(1j * np.cosh(r)) * (r < radius)
    return fn


def bundled_tc3() -> BubbleEnsemble:
    """Nine-bubble decomposition shipped with the package."""
    text = resources.files("nlsbubbles").joinpath("data/tc3_bubbles.yaml").read_text()
    _, e = parse_config(yaml.safe_load(text))
    assert e is not None
    return e


def load_test_case(case: int | str) -> TestCase:
    """Presets for the three reference problems in two dimensions.

    1. ``pi exp(-|x - m1|^2/2) + 2 exp(-|x - m2|^2/2)``, ``m1 = (0, 2)``,
       ``m2 = (1, 0)``: two real bubbles with ``L = 1``.
    2. ``exp(-|x - m3|^2) exp(i cosh|x - m3|)``, ``m3 = (1, 1)``: one bubble
       with ``L = 1/sqrt(2)``, ``A = L`` and the phase expanded to second
       order, ``gamma = 1`` and ``B = -2 L^2 = -1``.
    3. ``sqrt(16 - |x|^2) exp(i cosh|x|)`` on the disk of radius 4: the
       bundled nine-bubble fit.
    """
    case = str(case)
    if case == "1":
        m1, m2 = np.array([0.0, 2.0]), np.array([1.0, 0.0])
        e = BubbleEnsemble.of([Bubble.gaussian(np.pi, 1.0, 0.0, m1),
                               Bubble.gaussian(2.0, 1.0, 0.0, m2)])
        return TestCase("1", e, e.evaluate)
    if case == "2":
        m3 = np.array([1.0, 1.0])
        L = 1 / math.sqrt(2)
        e = BubbleEnsemble.of([Bubble.gaussian(L, L, -2 * L * L, m3, None, 1.0)])

        def exact(x):
            r = np.sqrt(np.sum((x - m3) ** 2, axis=-1))
            return np.exp(-r * r) * np.exp(1j * np.cosh(r))
        return TestCase("2", e, exact)
    if case == "3":
        return TestCase("3", bundled_tc3(), _disk_profile(4.0))
    raise ValueError(f"unknown test case {case!r}; expected 1, 2 or 3")


def strang_step_bubbles(e: BubbleEnsemble, dt: float, cfg: RunConfig,
                        diagnostics: list | None = None) -> BubbleEnsemble:
    """One split step of the bubble solver.

    The oscillator half steps are skipped when ``mu = 0``.  When
    ``lambda = 0`` the cubic factor is the identity, so the two half steps
    are applied as one exact step of length ``mu * dt``.
    """
    half = 0.5 * cfg.mu * dt
    if cfg.lam == 0:
        if cfg.mu == 0:
            return e
        return propagate_ensemble_linear(e, cfg.mu * dt)
    if cfg.mu != 0:
        e = propagate_ensemble_linear(e, half)
    e = step_nonlinear(e, dt, lam=cfg.lam, rtol=cfg.svd_rtol, diagnostics=diagnostics)
    if cfg.mu != 0:
        e = propagate_ensemble_linear(e, half)
    return e


@dataclass
class RunResult:
    """Everything a run produced, in memory."""

    config: RunConfig
    bubble_records: list[ObservableRecord] = field(default_factory=list)
    spectral_records: list[ObservableRecord] = field(default_factory=list)
    diagnostics: list[tuple[float, StepDiagnostics]] = field(default_factory=list)
    final_ensemble: BubbleEnsemble | None = None
    final_field: GridField | None = None


def _bubble_record(e: BubbleEnsemble, t: float, cfg: RunConfig) -> ObservableRecord:
    if e.is_gaussian():
        return bubble_observables(e, t, cfg.params)
    f = GridField.from_function(e.evaluate, cfg.grid_shape, cfg.halfwidth)
    return grid_observables(f.values, f.halfwidth, t, cfg.params)


def _step_schedule(cfg: RunConfig) -> tuple[int, float]:
    n = int(math.floor(cfg.t_final / cfg.dt + 1e-9))
    rest = cfg.t_final - n * cfg.dt
    return n, (rest if rest > 1e-12 * max(1.0, cfg.t_final) else 0.0)


def run_simulation(cfg: RunConfig) -> RunResult:
    """Run the configured method(s) and write outputs to ``cfg.out``.

    With ``cfg.out = None`` nothing is written and the results are only
    returned.
    """
    cfg.validate()
    if cfg.bubbles is not None:
        e0 = cfg.bubbles
        initial = e0.evaluate if cfg.testcase == "custom" else load_test_case(cfg.testcase).initial
    else:
        tc = load_test_case(cfg.testcase)
        e0, initial = tc.ensemble, tc.initial
    if cfg.bubbles is None and cfg.d != e0.d:
        raise ConfigError(f"test case {cfg.testcase} is {e0.d}-dimensional but d={cfg.d}")
    n_steps, rest = _step_schedule(cfg)
    result = RunResult(cfg)
    logger.info("run: method=%s testcase=%s dt=%g T=%g steps=%d", cfg.method,
                cfg.testcase, cfg.dt, cfg.t_final, n_steps)

    if cfg.method in ("bubbles", "both"):
        if cfg.lam != 0 and not e0.is_gaussian():
            raise ConfigError("the nonlinear bubble solver needs pure Gaussian bubbles")
        e = e0
        result.bubble_records.append(_bubble_record(e, 0.0, cfg))
        for k in range(1, n_steps + 1):
            diag: list = []
            e = strang_step_bubbles(e, cfg.dt, cfg, diag)
            t = k * cfg.dt
            if diag:
                result.diagnostics.append((t, diag[0]))
            if k % cfg.stride == 0:
                result.bubble_records.append(_bubble_record(e, t, cfg))
            if k % max(1, n_steps // 10) == 0:
                logger.info("bubbles: step %d/%d", k, n_steps)
        if rest:
            e = strang_step_bubbles(e, rest, cfg)
        result.final_ensemble = e

    if cfg.method in ("spectral", "both"):
        f = GridField.from_function(initial, cfg.grid_shape, cfg.halfwidth)
        check_aliasing(f)
        result.spectral_records.append(grid_observables(f.values, f.halfwidth, 0.0, cfg.params))
        for k in range(1, n_steps + 1):
            f = strang_step(f, cfg.dt, cfg.mu, cfg.lam)
            if k % cfg.stride == 0:
                result.spectral_records.append(
                    grid_observables(f.values, f.halfwidth, k * cfg.dt, cfg.params))
        if rest:
            f = strang_step(f, rest, cfg.mu, cfg.lam)
        result.final_field = f

    if cfg.out is not None:
        write_outputs(result, Path(cfg.out))
    return result


def _observable_header(d: int) -> list[str]:
    ps = [f"P{i + 1}" for i in range(d)]
    base = ["mass", "energy", "momentum"] + ps
    return ["t"] + base + [f"drift_{name}" for name in base]


def write_observables_csv(path: Path, records: list[ObservableRecord]) -> None:
    """Values and drifts relative to the first record."""
    d = len(records[0].nonradial)
    ref = records[0]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_observable_header(d))
        for r in records:
            vals = [r.mass, r.energy, r.momentum, *r.nonradial]
            refs = [ref.mass, ref.energy, ref.momentum, *ref.nonradial]
            drifts = [relative_drift(v, v0) for v, v0 in zip(vals, refs)]
            w.writerow([repr(float(r.t))] + [repr(float(v)) for v in vals + drifts])


def write_outputs(result: RunResult, out: Path) -> None:
    """Persist observables, diagnostics and final states."""
    out.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    if result.bubble_records:
        write_observables_csv(out / "observables_bubbles.csv", result.bubble_records)
        with open(out / "diagnostics.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "gram_condition", "effective_rank"])
            for t, dg in result.diagnostics:
                w.writerow([repr(float(t)), repr(float(dg.condition)), dg.effective_rank])
    if result.spectral_records:
        write_observables_csv(out / "observables_spectral.csv", result.spectral_records)
    if result.final_ensemble is not None:
        run = cfg.to_mapping()
        run.update(out=str(out), testcase="custom")
        dump_config(out / "final_state_bubbles.yaml", result.final_ensemble, run=run)
    if result.final_field is not None:
        result.final_field.to_csv(out / "final_state_grid.csv")
        if result.final_ensemble is not None:
            rendered = GridField.from_function(result.final_ensemble.evaluate,
                                               cfg.grid_shape, cfg.halfwidth)
            rendered.to_csv(out / "final_state_grid_bubbles.csv")
    elif result.final_ensemble is not None and cfg.d in (1, 2):
        GridField.from_function(result.final_ensemble.evaluate, cfg.grid_shape,
                                cfg.halfwidth).to_csv(out / "final_state_grid.csv")
    logger.info("wrote outputs to %s", out)


def config_with_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    """Copy of ``cfg`` with non-None overrides applied."""
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
