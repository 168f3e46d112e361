"""Command line entry point: ``ehonline <subcommand> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .analysis import ScenarioFamily, competitive_report, discretization_study, property_sweep
from .model import Scenario
from .offline import DEFAULT_GRID, offline_completion_time
from .online import simulate
from .scenario_file import load_scenario


def _sig(x: float | None) -> str:
    return "n/a" if x is None else f"{x:#.4g}"


def _scenario(args) -> Scenario:
    scn = load_scenario(args.scenario)
    changes = {}
    if args.step is not None:
        changes["step"] = args.step
    if args.tol_bits is not None:
        changes["tol_bits"] = args.tol_bits
    if args.tol_energy is not None:
        changes["tol_energy"] = args.tol_energy
    return scn.replace(**changes) if changes else scn


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve_offline(args) -> int:
    scn = _scenario(args)
    sol = offline_completion_time(scn, n_grid=args.grid)
    print(f"T_off={_sig(sol.completion_time)}")
    out = _out_dir(args)
    if out:
        sol.trajectory.to_csv(out / f"{scn.name}_offline.csv")
    return 0


def cmd_run_online(args) -> int:
    scn = _scenario(args)
    traj = simulate(scn, args.alg)
    status = _sig(traj.completion_time) if traj.completed else "not completed"
    print(f"alg{args.alg}: T_s={_sig(traj.waiting_end)} completion {status}")
    if traj.stalled:
        print("note: transmission stalled at least once awaiting energy")
    if traj.boundary_start:
        print("note: waiting ended exactly on the finite-time feasibility boundary")
    out = _out_dir(args)
    if out:
        traj.to_csv(out / f"{scn.name}_alg{args.alg}.csv")
    return 0 if traj.completed else 1


def cmd_compare(args) -> int:
    scn = _scenario(args)
    rep = competitive_report(scn, n_grid=args.grid, keep=True)
    print(
        f"T_off={_sig(rep.T_off)} T_on1={_sig(rep.T_on1)} T_on2={_sig(rep.T_on2)} "
        f"ratio1={_sig(rep.ratio1)} ratio2={_sig(rep.ratio2)}"
    )
    print(f"T_s1={_sig(rep.T_s1)} T_s2={_sig(rep.T_s2)}")
    for v in rep.verdicts:
        print(f"  {'ok  ' if v.ok else 'FAIL'} {v.name} (slack {v.slack:.3g})")
    out = _out_dir(args)
    if out:
        rep.offline.to_csv(out / f"{scn.name}_offline.csv")
        rep.alg1.to_csv(out / f"{scn.name}_alg1.csv")
        rep.alg2.to_csv(out / f"{scn.name}_alg2.csv")
    return 0 if rep.ok else 1


def cmd_sweep(args) -> int:
    fam = ScenarioFamily(seed=args.seed, count=args.count)
    summary = property_sweep(fam, n_grid=args.grid, workers=args.workers)
    print(summary.verdict_line())
    out = _out_dir(args)
    if out:
        (out / f"sweep_seed{args.seed}.csv").write_text(summary.to_csv())
    return 0 if summary.ok else 1


def cmd_discretize(args) -> int:
    scn = _scenario(args)
    periods = [float(p) for p in args.periods.split(",") if p.strip()]
    rows = discretization_study(scn, periods, n_grid=args.grid)
    lines = ["period,T_off,T_on2,error"]
    for r in rows:
        lines.append(f"{r.period!r},{'' if r.T_off is None else repr(r.T_off)},"
                     f"{'' if r.T_on2 is None else repr(r.T_on2)},{r.error or ''}")
        print(f"period={r.period:g} T_off={_sig(r.T_off)} T_on2={_sig(r.T_on2)}" + (f" ({r.error})" if r.error else ""))
    out = _out_dir(args)
    if out:
        (out / f"{scn.name}_discretization.csv").write_text("\n".join(lines) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ehonline", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="directory for CSV output")
    common.add_argument("--grid", type=int, default=DEFAULT_GRID, help="offline slots (default %(default)s)")

    scn_opts = argparse.ArgumentParser(add_help=False)
    scn_opts.add_argument("scenario", help=".scn file, or the name of a shipped one (fig1.scn, tight.scn)")
    scn_opts.add_argument("--step", type=float, help="integration step in seconds")
    scn_opts.add_argument("--tol-bits", type=float)
    scn_opts.add_argument("--tol-energy", type=float)

    p = sub.add_parser("solve-offline", parents=[scn_opts, common], help="offline minimum completion time")
    p.set_defaults(func=cmd_solve_offline)
    p = sub.add_parser("run-online", parents=[scn_opts, common], help="simulate one online policy")
    p.add_argument("--alg", type=int, choices=(1, 2), default=2)
    p.set_defaults(func=cmd_run_online)
    p = sub.add_parser("compare", parents=[scn_opts, common], help="offline vs both online policies")
    p.set_defaults(func=cmd_compare)
    p = sub.add_parser("discretize", parents=[scn_opts, common], help="staircase-arrival study")
    p.add_argument("--periods", default="0.5,0.25,0.1", help="comma-separated staircase periods")
    p.set_defaults(func=cmd_discretize)
    p = sub.add_parser("sweep", parents=[common], help="randomized invariant sweep")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, RuntimeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
