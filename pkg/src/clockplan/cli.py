"""``clockplan`` command line.

Exit codes: 0 success, 1 domain error (bad table, infeasible budget, ...),
2 usage error. Outputs are deterministic for identical inputs, flags and
seeds, and every output embeds the run configuration that produced it.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from .errors import ClockplanError
from .measurements import (
    BASELINE,
    MeasurementTable,
    aggregate_phases,
    assignment_totals,
    baseline_totals,
    expand_repeats,
    load_table,
    serialize_table,
    sidecar_of,
    sidecar_path,
)
from .metrics import Goal, Objective, waste_score
from .optimizer import (
    Strategy,
    min_energy_within,
    optimize,
    pareto_front,
    threshold_sweep,
    validate_assignment,
)
from .reports import (
    assignment_from_plan,
    dumps,
    plan_to_dict,
    render_plan,
    schedule_to_dict,
    sweep_to_csv,
    validation_to_dict,
)
from .scheduler import LatencyModel, build_schedule, prune_switches, schedule_cost
from .simulator import NoiseModel, Scenario, planted_scenario

log = logging.getLogger("clockplan")


@dataclass
class RunConfig:
    subcommand: str
    inputs: dict = field(default_factory=dict)
    output: Optional[str] = None
    goal: Optional[str] = None
    threshold: Optional[float] = None
    strategy: Optional[str] = None
    granularity: Optional[str] = None
    epsilon: Optional[float] = None
    seed: Optional[int] = None
    latency_s: Optional[float] = None
    reference: Optional[str] = None
    format: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v not in (None, {}, [])}


def _non_negative(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return value


def _float_list(text: str) -> list:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values or any(v < 0 for v in values):
        raise argparse.ArgumentTypeError("thresholds must be non-empty and >= 0")
    if values != sorted(values):
        raise argparse.ArgumentTypeError("thresholds must be sorted ascending")
    return values


def _strategy_list(text: str) -> list:
    names = [x.strip() for x in text.split(",") if x.strip()]
    valid = {s.value for s in Strategy}
    bad = [n for n in names if n not in valid]
    if not names or bad:
        raise argparse.ArgumentTypeError(f"strategies must be drawn from {sorted(valid)}")
    return names


def _write(text: str, out: Optional[str]):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _load(args) -> MeasurementTable:
    table = load_table(args.input, getattr(args, "sidecar", None))
    if getattr(args, "granularity", "kernel") == "pass":
        table = aggregate_phases(table)
    return table


def _add_table_args(p, granularity=True):
    p.add_argument("--in", dest="input", required=True, help="measurement CSV")
    p.add_argument("--sidecar", help="constraints/metadata JSON (default: <stem>.meta.json if present)")
    if granularity:
        p.add_argument("--granularity", choices=["kernel", "pass"], default="kernel",
                       help="'pass' sums kernels per phase before optimizing")


def _inputs(args) -> dict:
    found = {}
    for name in ("input", "sidecar", "plan", "scenario", "builtin"):
        value = getattr(args, name, None)
        if value is not None:
            found[name] = value
    return found


# -- subcommands -------------------------------------------------------------


def cmd_ingest(args) -> int:
    table = load_table(args.input, args.sidecar)
    if args.expand:
        table = expand_repeats(table)
    run = RunConfig("ingest", _inputs(args), args.out, extra={"expand": args.expand})
    base = baseline_totals(table)
    print(
        f"{len(table.kernels)} kernels, {len(table.configs())} configs, "
        f"baseline {base.time!r} s / {base.energy!r} J",
        file=sys.stderr,
    )
    if args.out:
        Path(args.out).write_text(f"# run: {json.dumps(run.to_dict(), sort_keys=True)}\n" + serialize_table(table))
        side = sidecar_of(table)
        if side["constraints"] or side["metadata"]:
            sidecar_path(args.out).write_text(dumps(side))
    return 0


def _reference_block(table, assignment, reference, epsilon):
    if reference == "auto":
        score = waste_score(assignment.totals, assignment.baseline, assignment.objective.time_loss_threshold)
        return {
            "reference": "auto",
            "reference_time_s": assignment.baseline.time,
            "reference_energy_j": assignment.baseline.energy,
            "energy_saved_j": score.energy_saved,
            "feasible": score.feasible,
        }
    front = pareto_front(table, epsilon)
    choices = min_energy_within(front, assignment.totals.time)
    best = assignment.totals if choices is None else assignment_totals(front.table, choices)
    return {
        "reference": "optimum",
        "reference_time_s": best.time,
        "reference_energy_j": best.energy,
        "waste_j": assignment.totals.energy - best.energy,
    }


def cmd_optimize(args) -> int:
    table = expand_repeats(_load(args))
    objective = Objective(Goal(args.goal), args.threshold if args.goal == "waste" else 0.0)
    assignment = optimize(table, objective, args.strategy, args.epsilon)
    run = RunConfig(
        "optimize", _inputs(args), args.out, args.goal, args.threshold, args.strategy,
        args.granularity, args.epsilon, reference=args.reference, format=args.format,
    )
    plan = plan_to_dict(assignment, table)
    plan["granularity"] = args.granularity
    plan["waste"] = _reference_block(table, assignment, args.reference, args.epsilon)
    plan["run"] = run.to_dict()
    _write(render_plan(plan, args.format), args.out)
    return 0


def cmd_sweep(args) -> int:
    table = _load(args)
    curve = threshold_sweep(table, args.strategies, args.thresholds, args.epsilon)
    run = RunConfig(
        "sweep", _inputs(args), args.out, "waste", granularity=args.granularity, epsilon=args.epsilon,
        format="csv", extra={"strategies": args.strategies, "thresholds": args.thresholds},
    )
    _write(sweep_to_csv(curve, "run: " + json.dumps(run.to_dict(), sort_keys=True)), args.out)
    return 0


def cmd_simulate(args) -> int:
    if args.builtin:
        scenario = planted_scenario()
    else:
        scenario = Scenario.from_dict(json.loads(Path(args.scenario).read_text()))
    if args.seed is not None:
        scenario.seed = args.seed
    table = scenario.generate()
    run = RunConfig("simulate", _inputs(args), args.out, seed=scenario.seed)
    _write(f"# run: {json.dumps(run.to_dict(), sort_keys=True)}\n" + serialize_table(table), args.out)
    if args.out:
        side = sidecar_of(table)
        if side["constraints"] or side["metadata"]:
            sidecar_path(args.out).write_text(dumps(side))
    if args.write_scenario:
        Path(args.write_scenario).write_text(dumps(scenario.to_dict()))
    return 0


def _plan_table(args, plan) -> MeasurementTable:
    table = load_table(args.input, args.sidecar)
    if plan.get("granularity") == "pass":
        table = aggregate_phases(table)
    return expand_repeats(table)


def cmd_schedule(args) -> int:
    plan = json.loads(Path(args.plan).read_text())
    table = _plan_table(args, plan)
    assignment = assignment_from_plan(plan, table)
    latency = LatencyModel(args.latency_s)
    entry = BASELINE if args.entry == "auto" else None
    schedule = build_schedule(assignment, table.indices, latency, entry)
    if args.prune:
        schedule = prune_switches(schedule, latency, table, assignment.objective)
    data = schedule_to_dict(schedule, table, schedule_cost(schedule, latency, table))
    data["pruned"] = args.prune
    data["run"] = RunConfig(
        "schedule", _inputs(args), args.out, latency_s=args.latency_s,
        extra={"prune": args.prune, "entry": args.entry},
    ).to_dict()
    _write(dumps(data), args.out)
    return 0


def cmd_validate(args) -> int:
    plan = json.loads(Path(args.plan).read_text())
    table = _plan_table(args, plan)
    assignment = assignment_from_plan(plan, table)
    noise = NoiseModel(args.sigma_time, args.sigma_power)
    report = validate_assignment(table, assignment, noise, args.reps, args.seed)
    data = validation_to_dict(report)
    data["run"] = RunConfig(
        "validate", _inputs(args), args.out, seed=args.seed,
        extra={"reps": args.reps, "sigma_time": args.sigma_time, "sigma_power": args.sigma_power},
    ).to_dict()
    _write(dumps(data), args.out)
    return 0


def cmd_report(args) -> int:
    plan = json.loads(Path(args.input).read_text())
    _write(render_plan(plan, args.format), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clockplan", description="Kernel-level GPU DVFS planning")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log warnings and progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and normalize a measurement table")
    _add_table_args(p, granularity=False)
    p.add_argument("--expand", action="store_true", help="fold repeat counts into the samples")
    p.add_argument("--out", help="normalized CSV (seconds, joules)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("optimize", help="compute a clock assignment")
    _add_table_args(p)
    p.add_argument("--goal", choices=[g.value for g in Goal], default="waste")
    p.add_argument("--threshold", type=_non_negative, default=0.0,
                   help="tolerated time loss as a fraction (waste only)")
    p.add_argument("--strategy", choices=[s.value for s in Strategy], default="global")
    p.add_argument("--epsilon", type=_non_negative, default=0.0, help="front approximation factor")
    p.add_argument("--reference", choices=["auto", "optimum"], default="auto",
                   help="waste reference: auto baseline or the grid optimum")
    p.add_argument("--format", choices=["json", "csv", "markdown"], default="json")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="energy/time deltas over tolerated time-loss thresholds")
    _add_table_args(p)
    p.add_argument("--strategies", type=_strategy_list, default=["local", "global"])
    p.add_argument("--thresholds", type=_float_list, default=[0.0, 0.05, 0.10, 0.30])
    p.add_argument("--epsilon", type=_non_negative, default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="generate a measurement table from a scenario")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help="scenario JSON")
    src.add_argument("--builtin", choices=["planted"], help="built-in scenario")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--write-scenario", help="also write the resolved scenario JSON here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("schedule", help="turn a plan into a frequency schedule")
    p.add_argument("--plan", required=True)
    _add_table_args(p, granularity=False)
    p.add_argument("--latency-s", type=_non_negative, default=0.0, help="seconds per clock switch")
    p.add_argument("--prune", action="store_true", help="merge switches that cost more than they save")
    p.add_argument("--entry", choices=["none", "auto"], default="none",
                   help="config active before the first kernel")
    p.add_argument("--out")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("validate", help="re-measure a plan under noise against the baseline")
    p.add_argument("--plan", required=True)
    _add_table_args(p, granularity=False)
    p.add_argument("--reps", type=_positive_int, default=10)
    p.add_argument("--sigma-time", type=_non_negative, default=0.0)
    p.add_argument("--sigma-power", type=_non_negative, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("report", help="render a plan as a per-kernel table")
    p.add_argument("--in", dest="input", required=True, help="plan JSON")
    p.add_argument("--format", choices=["json", "csv", "markdown"], default="markdown")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ClockplanError, OSError, ValueError, KeyError) as exc:
        message = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"clockplan {args.command}: {type(exc).__name__}: {message}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
