"""Command-line entry point.

Exit codes: 0 success, 1 invalid input (scenario, parameters, files),
2 numerical divergence, 3 safety-filter infeasibility.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import analysis, plotting, potential, safety
from .core import ConfigurationError, Params
from .scenario import ScenarioError, ScenarioFile, load_scenario, semantic_errors
from .sim import NumericalDivergence, Trajectory, ValidationFailed, run

log = logging.getLogger("marsupial")

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED, EXIT_UNSAFE = 0, 1, 2, 3

_PARAM_FIELDS = {f.name for f in dataclasses.fields(Params)}
_SWEEPABLE = _PARAM_FIELDS | {"dt", "t_end", "k_nav", "planner_speed", "planner_duration"}


def _write(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def _simulate(sc: ScenarioFile, controller: str = "equilibrium") -> Trajectory:
    return run(sc.initial_state(), sc.sim_config(controller), sc.params)


def cmd_simulate(args) -> int:
    sc = load_scenario(args.scenario)
    traj = _simulate(sc)
    out = args.out or sc.out_csv
    if out:
        traj.save(out)
        log.info("wrote %s (%d rows)", out, traj.t.size)
    else:
        sys.stdout.write(traj.to_csv())
    svg = args.svg or sc.out_svg
    if svg:
        plotting.plot_trajectory(traj, svg, sc.obstacles)
    if sc.out_report:
        _write(analysis.check_properties(traj, sc.params).to_json(), sc.out_report)
    T = traj.separation_time
    log.info("separation time: %s", "none" if T is None else f"{T:.6f} s")
    return EXIT_OK


def _params_for(traj: Trajectory, scenario_path: Optional[str]) -> Params:
    if scenario_path:
        return load_scenario(scenario_path).params
    if "params" in traj.meta:
        return Params(**traj.meta["params"])
    raise ConfigurationError("parameters unknown: pass --scenario or keep the .meta.json sidecar")


def cmd_analyze(args) -> int:
    traj = Trajectory.load(args.csv)
    params = _params_for(traj, args.scenario)
    baseline = Trajectory.load(args.baseline) if args.baseline else None
    report = analysis.check_properties(traj, params, baseline=baseline)
    _write(report.to_json(), args.report)
    if args.svg:
        plotting.plot_jumps(traj, args.svg, baseline)
    if args.check and not report.passed:
        return EXIT_INVALID
    return EXIT_OK


def _parse_params(text: Optional[str]) -> Params:
    if not text:
        return Params()
    values = {}
    for item in text.split(","):
        key, _, value = item.partition("=")
        key = key.strip()
        if key not in _PARAM_FIELDS:
            raise ConfigurationError(f"unknown parameter {key!r}")
        values[key] = float(value)
    return Params(**values)


def cmd_potential(args) -> int:
    params = _parse_params(args.params)
    if args.etc < 0:
        raise ConfigurationError("--etc must be nonnegative")
    upper = args.max if args.max is not None else args.etc
    grid = np.linspace(0.0, upper, args.points)
    rows = potential.sweep_P(args.etc, grid, params)
    _write(potential.sweep_to_csv(rows), args.out)
    if args.svg:
        plotting.plot_potential(rows, args.etc, params, args.svg)
    eq = potential.equilibria(args.etc, params)
    log.info("roots %s (%s)", eq.roots(), eq.regime.value)
    return EXIT_OK


def cmd_baseline(args) -> int:
    sc = load_scenario(args.scenario)
    base = _simulate(sc, controller="baseline")
    equi = _simulate(sc)
    if args.out:
        base.save(args.out)
    report = analysis.smoothness_report(equi, base, sc.params)
    data = dataclasses.asdict(report)
    data["ratio"] = analysis._jsonable(report.ratio)
    _write(json.dumps(data, indent=2, sort_keys=True) + "\n", args.report)
    if args.svg:
        plotting.plot_jumps(equi, args.svg, base)
    return EXIT_OK


def _parse_range(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigurationError(f"--range expects a:b:steps, got {text!r}")
    a, b, steps = float(parts[0]), float(parts[1]), int(parts[2])
    if steps < 1:
        raise ConfigurationError("--range needs at least one step")
    return np.linspace(a, b, steps)


def _with_value(sc: ScenarioFile, name: str, value: float) -> ScenarioFile:
    if name in _PARAM_FIELDS:
        return dataclasses.replace(sc, params=dataclasses.replace(sc.params, **{name: value}))
    return dataclasses.replace(sc, **{name: value})


def _sweep_point(sc: ScenarioFile, name: str, value: float, out: str) -> dict:
    row = {"index": Path(out).stem, name: value, "status": "ok", "T": "", "final_ept": "",
           "min_etc": "", "pass": ""}
    point = _with_value(sc, name, value)
    problems = semantic_errors(point)
    if problems:
        row["status"] = "invalid:" + "|".join(problems)
        return row
    try:
        traj = _simulate(point)
    except NumericalDivergence:
        row["status"] = "diverged"
        return row
    except safety.SafetyError:
        row["status"] = "unsafe"
        return row
    traj.save(out)
    report = analysis.check_properties(traj, point.params)
    row.update(T=report.p1.T if report.p1.T is not None else "", final_ept=report.p2.final_ept,
               min_etc=report.p3.min_etc)
    row["pass"] = report.passed
    return row


def cmd_sweep(args) -> int:
    sc = load_scenario(args.scenario)
    if args.param not in _SWEEPABLE:
        raise ConfigurationError(f"cannot sweep {args.param!r}; choose from {sorted(_SWEEPABLE)}")
    values = _parse_range(args.range)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(sc, args.param, float(v), str(out_dir / f"{args.param}_{i:03d}.csv"))
            for i, v in enumerate(values)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_point, *zip(*jobs)))
    else:
        rows = [_sweep_point(*job) for job in jobs]
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["index", args.param, "status", "T", "final_ept",
                                                "min_etc", "pass"], lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    log.info("swept %s over %d points into %s", args.param, len(rows), out_dir)
    return EXIT_OK


def cmd_plot(args) -> int:
    traj = Trajectory.load(args.csv)
    obstacles = load_scenario(args.scenario).obstacles if args.scenario else ()
    plotting.plot_trajectory(traj, args.svg, obstacles)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="marsupial", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario and write the trajectory CSV")
    p.add_argument("scenario")
    p.add_argument("--out", help="trajectory CSV (default: scenario out_csv, else stdout)")
    p.add_argument("--svg", help="also render trajectory and distance plots")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="check separation/navigation/avoidance on a trajectory CSV")
    p.add_argument("csv")
    p.add_argument("--report", help="JSON report path (default: stdout)")
    p.add_argument("--scenario", help="take parameters from this scenario instead of the sidecar")
    p.add_argument("--baseline", help="event-baseline trajectory CSV for the smoothness comparison")
    p.add_argument("--svg", help="also render the relative-input jump plot")
    p.add_argument("--check", action="store_true", help="exit 1 if any property fails")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("potential", help="sample the potential gradient at a fixed carrier-target distance")
    p.add_argument("--etc", type=float, required=True, help="carrier-target distance [m]")
    p.add_argument("--params", help="comma list, e.g. k_p=1,b=8,c=1,d=1")
    p.add_argument("--max", type=float, help="largest passenger-carrier distance (default: --etc)")
    p.add_argument("--points", type=int, default=1001)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_potential)

    p = sub.add_parser("baseline", help="run the event-triggered baseline and compare input jumps")
    p.add_argument("scenario")
    p.add_argument("--out", help="baseline trajectory CSV")
    p.add_argument("--report", help="comparison JSON (default: stdout)")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("sweep", help="batch runs over one parameter, one CSV per point")
    p.add_argument("scenario")
    p.add_argument("--param", required=True)
    p.add_argument("--range", required=True, help="a:b:steps")
    p.add_argument("--out-dir", default="sweep")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="render a trajectory CSV")
    p.add_argument("csv")
    p.add_argument("--svg", required=True)
    p.add_argument("--scenario", help="draw this scenario's obstacles")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ScenarioError as exc:
        for err in exc.errors:
            print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    except ValidationFailed as exc:
        for err in exc.violations:
            print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    except (ConfigurationError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalDivergence as exc:
        print(f"error: numerical divergence at t={exc.t:.6g} s", file=sys.stderr)
        return EXIT_DIVERGED
    except safety.SafetyError as exc:
        print(f"error: safety filter infeasible: {exc}", file=sys.stderr)
        return EXIT_UNSAFE


if __name__ == "__main__":
    sys.exit(main())
