"""Executable frequency schedules with switch-latency accounting.

Adjacent kernels with the same config share one step. Every config change
stalls for ``switch_latency`` seconds, and the stall draws baseline average
power.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .errors import OrderMismatch, UnknownKernel
from .measurements import (
    BASELINE,
    ClockConfig,
    MeasurementTable,
    Totals,
    expand_repeats,
    totals_of,
)
from .metrics import Objective, objective_key
from .optimizer import Assignment


@dataclass(frozen=True)
class LatencyModel:
    switch_latency: float = 0.0  # seconds per clock change

    def __post_init__(self):
        if not self.switch_latency >= 0:
            raise ValueError("switch latency must be >= 0")


def _latency(value) -> LatencyModel:
    return value if isinstance(value, LatencyModel) else LatencyModel(float(value))


@dataclass(frozen=True)
class Step:
    config: ClockConfig
    kernels: tuple  # kernel indices in execution order

    @property
    def first_index(self) -> int:
        return self.kernels[0]

    @property
    def last_index(self) -> int:
        return self.kernels[-1]


@dataclass(frozen=True)
class FrequencySchedule:
    steps: tuple
    entry_config: Optional[ClockConfig] = None
    latency: float = 0.0

    @property
    def switch_count(self) -> int:
        internal = max(len(self.steps) - 1, 0)
        if self.entry_config is not None and self.steps and self.steps[0].config != self.entry_config:
            internal += 1
        return internal

    @property
    def modeled_overhead(self) -> float:
        return self.switch_count * self.latency

    @property
    def order(self) -> list:
        return [k for step in self.steps for k in step.kernels]

    def per_kernel(self) -> dict:
        return {k: step.config for step in self.steps for k in step.kernels}


def _coalesce(pairs, entry_config=None, latency=0.0) -> FrequencySchedule:
    """Run-length encode ``(kernel, config)`` pairs into steps."""
    steps = []
    for kernel, config in pairs:
        if steps and steps[-1][0] == config:
            steps[-1][1].append(kernel)
        else:
            steps.append((config, [kernel]))
    return FrequencySchedule(tuple(Step(c, tuple(ks)) for c, ks in steps), entry_config, latency)


def build_schedule(
    assignment: Assignment,
    order: Sequence,
    latency: Union[LatencyModel, float] = 0.0,
    entry_config: Optional[ClockConfig] = None,
) -> FrequencySchedule:
    order = [getattr(k, "index", k) for k in order]
    if len(order) != len(set(order)) or set(order) != set(assignment.choices):
        raise OrderMismatch("execution order must list every assigned kernel exactly once")
    return _coalesce(
        ((k, assignment.choices[k]) for k in order), entry_config, _latency(latency).switch_latency
    )


def _stall_power(table: MeasurementTable, kernels) -> float:
    base = totals_of(table.samples[k][BASELINE] for k in kernels)
    return base.energy / base.time


def schedule_cost(schedule: FrequencySchedule, latency, table: MeasurementTable) -> Totals:
    """Modeled totals: chosen samples plus stall time and stall energy for every switch."""
    table = expand_repeats(table)
    latency = _latency(latency).switch_latency
    parts = []
    for step in schedule.steps:
        for k in step.kernels:
            rows = table.samples.get(k)
            if rows is None:
                raise UnknownKernel(f"schedule references unknown kernel {k}")
            if step.config not in rows:
                raise UnknownKernel(f"kernel {k} has no sample at {step.config}")
            parts.append(rows[step.config])
    compute = totals_of(parts)
    stall = schedule.switch_count * latency
    if stall == 0:
        return compute
    return Totals(compute.time + stall, compute.energy + stall * _stall_power(table, schedule.order))


class _Evaluator:
    def __init__(self, table, latency, objective, order):
        self.table = table
        self.latency = latency
        self.objective = objective
        self.baseline = totals_of(table.samples[k][BASELINE] for k in order)
        self.configs = {k: set(table.samples[k]) for k in order}

    def key(self, schedule):
        totals = schedule_cost(schedule, self.latency, self.table)
        vector = [schedule.per_kernel()[k] for k in schedule.order]
        return objective_key(totals, self.objective, self.baseline, schedule.switch_count, vector)

    def common(self, kernels):
        shared = set.intersection(*(self.configs[k] for k in kernels))
        return sorted((c for c in shared if self.table.allows(c)), key=ClockConfig.sort_key)


def _moves(schedule: FrequencySchedule, ev: _Evaluator):
    order = schedule.order
    # Merge a neighbouring pair of steps under any config both spans can run at.
    steps = schedule.steps
    for i in range(len(steps) - 1):
        span = steps[i].kernels + steps[i + 1].kernels
        for config in ev.common(span):
            pairs = []
            for j, step in enumerate(steps):
                c = config if j in (i, i + 1) else step.config
                pairs.extend((k, c) for k in step.kernels)
            yield _coalesce(pairs, schedule.entry_config, schedule.latency)
    # Collapse to one uniform config.
    for config in ev.common(order):
        yield _coalesce(((k, config) for k in order), schedule.entry_config, schedule.latency)


def prune_switches(
    schedule: FrequencySchedule,
    latency: Union[LatencyModel, float],
    table: MeasurementTable,
    objective: Objective,
) -> FrequencySchedule:
    """Greedy best-first merging of steps while the objective under switch cost improves."""
    table = expand_repeats(table)
    latency = _latency(latency).switch_latency
    schedule = FrequencySchedule(schedule.steps, schedule.entry_config, latency)
    if latency == 0 or not schedule.steps:
        return schedule
    ev = _Evaluator(table, latency, objective, schedule.order)
    current = ev.key(schedule)
    while True:
        best, best_key = None, current
        for candidate in _moves(schedule, ev):
            key = ev.key(candidate)
            if key < best_key:
                best, best_key = candidate, key
        if best is None:
            return schedule
        schedule, current = best, best_key


def stall_overhead(schedule: FrequencySchedule, table: MeasurementTable) -> Totals:
    """Stall overhead alone (time, energy)."""
    table = expand_repeats(table)
    stall = schedule.modeled_overhead
    if stall == 0:
        return Totals(0.0, 0.0)
    return Totals(stall, stall * _stall_power(table, schedule.order))

