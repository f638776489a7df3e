"""JSON/CSV/Markdown renderings of plans, sweeps, schedules and validation runs."""

from __future__ import annotations

import csv
import io
import json

from .measurements import (
    BASELINE,
    ClockConfig,
    MeasurementTable,
    Totals,
    expand_repeats,
    pct_change,
)
from .metrics import Goal, Objective
from .optimizer import Assignment, Strategy, SweepCurve, ValidationReport, make_assignment
from .scheduler import FrequencySchedule, stall_overhead

PLAN_COLUMNS = ("index", "name", "mem_clock", "core_clock", "time_pct", "energy_pct")


def dumps(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _totals(t: Totals) -> dict:
    return {"time_s": t.time, "energy_j": t.energy}


def _config(c: ClockConfig) -> dict:
    return {"mem_clock": c.mem, "core_clock": c.core}


def plan_to_dict(assignment: Assignment, table: MeasurementTable) -> dict:
    table = expand_repeats(table)
    choices = []
    for kernel in table.kernels:
        config = assignment.choices[kernel.index]
        sample = table.samples[kernel.index][config]
        base = table.samples[kernel.index][BASELINE]
        choices.append({
            "index": kernel.index,
            "name": kernel.name,
            "phase": kernel.phase.value,
            **_config(config),
            "time_s": sample.time,
            "energy_j": sample.energy,
            "time_pct": pct_change(sample.time, base.time),
            "energy_pct": pct_change(sample.energy, base.energy),
        })
    return {
        "objective": assignment.objective.kind.value,
        "strategy": assignment.strategy.value,
        "threshold": assignment.objective.time_loss_threshold,
        "baseline": _totals(assignment.baseline),
        "totals": _totals(assignment.totals),
        "deltas": {"time_pct": assignment.deltas.time_pct, "energy_pct": assignment.deltas.energy_pct},
        "choices": choices,
    }


def plan_choices(plan: dict) -> dict:
    return {c["index"]: ClockConfig(c["mem_clock"], c["core_clock"]) for c in plan["choices"]}


def assignment_from_plan(plan: dict, table: MeasurementTable) -> Assignment:
    """Rebuild an :class:`Assignment` against ``table`` (already at the plan's granularity)."""
    objective = Objective(Goal(plan["objective"]), plan.get("threshold", 0.0))
    table = expand_repeats(table)
    return make_assignment(table, plan_choices(plan), objective, Strategy(plan["strategy"]))


def plan_rows(plan: dict) -> list:
    return [[c[col] for col in PLAN_COLUMNS] for c in plan["choices"]]


def _fmt_pct(x: float) -> str:
    return f"{x:+.2f}"


def render_plan(plan: dict, fmt: str) -> str:
    if fmt == "json":
        return dumps(plan)
    if fmt == "csv":
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(PLAN_COLUMNS)
        writer.writerows(plan_rows(plan))
        return out.getvalue()
    if fmt == "markdown":
        lines = [
            "| # | Kernel | Mem. (MHz) | Core (MHz) | Time (%) | Energy (%) |",
            "|--:|:-------|-----------:|-----------:|---------:|-----------:|",
        ]
        for c in plan["choices"]:
            lines.append(
                f"| {c['index']} | {c['name']} | {c['mem_clock']} | {c['core_clock']} "
                f"| {_fmt_pct(c['time_pct'])} | {_fmt_pct(c['energy_pct'])} |"
            )
        d = plan["deltas"]
        lines.append(f"| | **Total** | | | {_fmt_pct(d['time_pct'])} | {_fmt_pct(d['energy_pct'])} |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def sweep_to_csv(curve: SweepCurve, header_comment: str = "") -> str:
    out = io.StringIO()
    if header_comment:
        out.write(f"# {header_comment}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["strategy", "threshold", "time_pct", "energy_pct"])
    for e in curve.entries:
        writer.writerow([e.strategy.value, repr(e.threshold), repr(e.time_pct), repr(e.energy_pct)])
    return out.getvalue()


def schedule_to_dict(schedule: FrequencySchedule, table: MeasurementTable, modeled: Totals) -> dict:
    entry = schedule.entry_config
    return {
        "latency_s": schedule.latency,
        "entry_config": None if entry is None else _config(entry),
        "steps": [
            {**_config(s.config), "first_index": s.first_index, "last_index": s.last_index}
            for s in schedule.steps
        ],
        "switch_count": schedule.switch_count,
        "modeled": _totals(modeled),
        "overhead": _totals(stall_overhead(schedule, table)),
    }


def validation_to_dict(report: ValidationReport) -> dict:
    def delta(d):
        return {"time_pct": d.time_pct, "energy_pct": d.energy_pct}

    return {
        "repetitions": report.repetitions,
        "pairs": report.pairs,
        "planned": delta(report.planned),
        "mean": delta(report.mean),
        "min": delta(report.min),
        "max": delta(report.max),
        "plan_totals": [_totals(t) for t in report.plan_totals],
        "baseline_totals": [_totals(t) for t in report.baseline_totals],
    }
