"""Command line: ``run``, ``sweep`` and ``validate``.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 solver failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import ao, experiment
from .scenario import Scenario, ScenarioError

EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 1, 2


def _scenario(path) -> Scenario:
    if path is None:
        return Scenario()
    return experiment.load_scenario(path)


def _values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse {text!r} as a comma-separated list") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="secure-ris-uav", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="one realization through one algorithm")
    run.add_argument("--config", help="config file (default: desk-scale scenario)")
    run.add_argument("--algorithm", default="JO", choices=ao.ALGORITHMS)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", required=True)

    sweep = sub.add_parser("sweep", help="Monte-Carlo sweep over one parameter")
    sweep.add_argument("--config")
    sweep.add_argument("--axis", required=True, choices=experiment.AXES)
    sweep.add_argument("--values", required=True, type=_values)
    sweep.add_argument("--realizations", type=int, default=10)
    sweep.add_argument("--base-seed", type=int, default=0)
    sweep.add_argument("--algorithms", default=",".join(ao.ALGORITHMS))
    sweep.add_argument("--out", required=True)

    val = sub.add_parser("validate", help="check a config file")
    val.add_argument("--config", required=True)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        scenario = _scenario(args.config)
        if args.command == "validate":
            print(f"ok: N = {scenario.N}, M = {scenario.M}, D = {scenario.D:g} m")
            return EXIT_OK
        if args.command == "run":
            row = experiment.run_single(scenario, args.algorithm, args.seed)
            rows = [row]
        else:
            spec = experiment.SweepSpec(args.axis, args.values, args.realizations, args.base_seed,
                                        tuple(a.strip() for a in args.algorithms.split(",") if a.strip()))
            rows = experiment.run_sweep(spec, scenario)
    except (ScenarioError, experiment.ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    experiment.emit_results(rows, args.out)
    for r in rows:
        print(f"{r.algorithm} seed={r.seed} value={r.value} R_sec={r.R_sec:.6f} iterations={r.iterations} {r.status}")
    failed = [r for r in rows if not r.ok]
    if failed:
        print(f"{len(failed)} run(s) failed", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
