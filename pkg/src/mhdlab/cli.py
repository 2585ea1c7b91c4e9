"""Command line entry point: ``mhdlab {run,bisect,check-inequalities,audit}``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from .checkpoint import CheckpointError, GridMismatchError, read_checkpoint
from .config import ConfigError, load_config

__all__ = ["main", "build_parser"]


def _print_json(obj):
    print(json.dumps(obj, indent=2, sort_keys=True, default=str))


def _cmd_run(args) -> int:
    from .runner import run_scenario

    spec = load_config(args.config)
    out = Path(args.out)
    res = run_scenario(spec, out_dir=out, resume=args.resume)
    print(f"termination: {res.termination.value} at t={res.termination_time!r} after {res.steps} steps")
    print(f"verdict: {res.verdict}")
    print(f"outputs: {out / 'timeseries.csv'}, {out / 'summary.json'}")
    return 0 if res.termination.value in ("horizon_reached", "user_stop") else 3


def _cmd_bisect(args) -> int:
    from .runner import bisect_threshold

    spec = load_config(args.config)
    rep = bisect_threshold(spec, args.lo, args.hi, max_iter=args.max_iter, rel_tol=args.tol)
    _print_json(rep.to_dict())
    return 0


def _cmd_check(args) -> int:
    from .ensembles import run_inequality_ensembles

    rep = run_inequality_ensembles(seed=args.seed, trials=args.trials, n=args.n)
    _print_json(rep.to_dict())
    return 0 if rep.weak_violations == 0 else 4


def _cmd_audit(args) -> int:
    from .diagnostics import audit_energy

    a = read_checkpoint(args.ckpt_a)
    b = read_checkpoint(args.ckpt_b, expect_grid=a.state.grid)
    if a.constants != b.constants:
        raise CheckpointError("checkpoints were written with different physical constants")
    dt = args.dt if args.dt is not None else b.state.time - a.state.time
    if not dt > 0:
        raise CheckpointError("audit needs a positive time step between the two checkpoints")
    rep = audit_energy(a.state, b.state, dt, a.constants, hermite=not args.trapezoid)
    _print_json(asdict(rep))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mhdlab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario to its horizon")
    r.add_argument("--config", required=True)
    r.add_argument("--out", default="run_out")
    r.add_argument("--resume", default=None, help="checkpoint to continue from")
    r.set_defaults(func=_cmd_run)

    b = sub.add_parser("bisect", help="bisect the amplitude scale where the monitor verdict flips")
    b.add_argument("--config", required=True)
    b.add_argument("--lo", type=float, required=True)
    b.add_argument("--hi", type=float, required=True)
    b.add_argument("--max-iter", type=int, default=12)
    b.add_argument("--tol", type=float, default=0.02, help="relative tolerance on the scale")
    b.set_defaults(func=_cmd_bisect)

    c = sub.add_parser("check-inequalities", help="random ensembles for the norm inequalities")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--trials", type=int, default=100)
    c.add_argument("--n", type=int, default=16)
    c.set_defaults(func=_cmd_check)

    a = sub.add_parser("audit", help="energy audit between two checkpoints")
    a.add_argument("--ckpt-a", required=True)
    a.add_argument("--ckpt-b", required=True)
    a.add_argument("--dt", type=float, default=None)
    a.add_argument("--trapezoid", action="store_true", help="plain trapezoidal dissipation")
    a.set_defaults(func=_cmd_audit)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CheckpointError, GridMismatchError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
