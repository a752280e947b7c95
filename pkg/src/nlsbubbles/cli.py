"""Command-line entry point.

Examples
--------
Run test case 2 with both solvers::

    nlsbubbles --method both --testcase 2 --dt 1e-3 --t-final 1 --out runs/tc2

Run from a configuration file, overriding the output directory::

    nlsbubbles --config my_run.yaml --out runs/custom
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config
from .driver import METHODS, RunConfig, config_with_overrides, run_simulation


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nlsbubbles",
        description="Gaussian bubble and spectral solvers for the trapped cubic NLS.")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--testcase", choices=("1", "2", "3", "custom"))
    p.add_argument("--config", help="YAML file with 'run' and 'bubbles' sections")
    p.add_argument("--dt", type=float)
    p.add_argument("--t-final", dest="t_final", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--halfwidth", type=float)
    p.add_argument("--svd-rtol", dest="svd_rtol", type=float)
    p.add_argument("--out", help="output directory")
    p.add_argument("--stride", type=int, help="record observables every N steps")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config:
            run, bubbles = load_config(args.config)
            cfg = RunConfig.from_mapping(run, bubbles)
        else:
            cfg = RunConfig()
        cfg = config_with_overrides(
            cfg, method=args.method, testcase=args.testcase, dt=args.dt,
            t_final=args.t_final, mu=args.mu, lam=args.lam, nx=args.nx, ny=args.ny,
            halfwidth=args.halfwidth, svd_rtol=args.svd_rtol, out=args.out,
            stride=args.stride)
        result = run_simulation(cfg)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for name, recs in (("bubbles", result.bubble_records), ("spectral", result.spectral_records)):
        if recs:
            last = recs[-1]
            print(f"{name}: t={last.t:g} mass={last.mass:.12g} energy={last.energy:.12g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
