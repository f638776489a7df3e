"""Per-kernel clock assignment.

Picking one config per kernel to minimize total energy under a total-time
budget is a multiple-choice knapsack. The global solver builds the exact
(time, energy) Pareto front of all assignments kernel by kernel, pruning
dominated partial sums after each kernel. One front answers every
threshold and the EDP objective. EDP is increasing in both coordinates, so
its optimum is always a front point.

Front arithmetic runs in float64 and is order dependent. Final candidates
are re-scored with correctly rounded sums (:func:`measurements.totals_of`),
so reported totals do not depend on the kernel processing order.
"""

from __future__ import annotations

import enum
import itertools
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import (
    FrontOverflow,
    Infeasible,
    InstanceTooLarge,
    NoCommonConfig,
    UnknownConfigInAssignment,
)
from .measurements import (
    BASELINE,
    ClockConfig,
    DeltaPct,
    MeasurementTable,
    Totals,
    assignment_totals,
    baseline_totals,
    candidate_set,
    common_configs,
    expand_repeats,
    pct_change,
    totals_of,
)
from .metrics import Goal, Objective, objective_key
from .simulator import NoiseModel

DEFAULT_FRONT_CAP = 5_000_000
DEFAULT_BRUTE_FORCE_CAP = 10**7
# Relative window around a decision boundary inside which float64 partial
# sums are re-checked exactly.
_REL_SLACK = 1e-9
_CHUNK = 1 << 22


class Strategy(enum.Enum):
    LOCAL = "local"
    GLOBAL = "global"
    COARSE = "coarse"


def front_cap() -> int:
    """Point cap for the front, overridable with ``CLOCKPLAN_FRONT_CAP``."""
    value = os.environ.get("CLOCKPLAN_FRONT_CAP")
    return int(value) if value else DEFAULT_FRONT_CAP


@dataclass(frozen=True)
class Assignment:
    choices: Mapping[int, ClockConfig]
    totals: Totals
    baseline: Totals
    objective: Objective
    strategy: Strategy
    deltas: DeltaPct = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "deltas", DeltaPct.between(self.totals, self.baseline))

    def config_vector(self) -> list:
        return [self.choices[i] for i in sorted(self.choices)]


def make_assignment(table, choices, objective, strategy, baseline=None) -> Assignment:
    baseline = baseline_totals(table) if baseline is None else baseline
    return Assignment(dict(choices), assignment_totals(table, choices), baseline, objective, strategy)


def _key(table, choices, objective, baseline):
    totals = assignment_totals(table, choices)
    configs = [choices[i] for i in table.indices]
    return objective_key(totals, objective, baseline, configs=configs)


# -- Pareto front ----------------------------------------------------------


@dataclass(frozen=True)
class FrontPoint:
    totals: Totals
    choices: Mapping[int, ClockConfig]


class ParetoFront:
    """Non-dominated (time, energy) totals, sorted by time ascending.

    ``times``/``energies`` hold the float64 partial sums used while building;
    :meth:`point` recomputes exact totals from the choice vector.
    """

    def __init__(self, table, order, candidates, times, energies, stages, epsilon):
        self.table = table
        self.order = order  # kernel indices in processing order
        self.candidates = candidates  # per processed kernel: list of (config, sample)
        self.times = times
        self.energies = energies
        self._stages = stages  # per processed kernel: (parent ids, candidate ids)
        self.epsilon = epsilon

    def __len__(self):
        return len(self.times)

    def choice_ids(self, ids) -> np.ndarray:
        """Candidate positions, shape ``(len(ids), n_kernels)``, columns in processing order."""
        ids = np.asarray(ids, dtype=np.int64)
        out = np.empty((len(ids), len(self.order)), dtype=np.int64)
        cur = ids
        for k in range(len(self.order) - 1, -1, -1):
            parent, cand = self._stages[k]
            out[:, k] = cand[cur]
            cur = parent[cur]
        return out

    def choices(self, i: int) -> dict:
        row = self.choice_ids([i])[0]
        return {idx: self.candidates[k][row[k]][0] for k, idx in enumerate(self.order)}

    def point(self, i: int) -> FrontPoint:
        choices = self.choices(i)
        return FrontPoint(assignment_totals(self.table, choices), choices)

    @property
    def points(self) -> list:
        return [self.point(i) for i in range(len(self))]


def _prune(times, energies, tiebreak):
    """Indices of the non-dominated points, sorted by time; exact ties keep the lowest tiebreak."""
    order = np.lexsort((tiebreak, energies, times))
    e = energies[order]
    best_before = np.minimum.accumulate(e)
    keep = np.empty(len(e), dtype=bool)
    if len(e):
        keep[0] = True
        keep[1:] = e[1:] < best_before[:-1]
    return order[keep]


def _thin(times, energies, delta):
    """Epsilon-thinning of a sorted front: one point per multiplicative energy band.

    The kept point of a band has the lowest time and an energy within a
    factor ``1 + delta`` of every dropped point in that band.
    """
    if delta <= 0 or len(times) < 2:
        return np.arange(len(times))
    bands = np.floor(np.log(energies) / np.log1p(delta))
    # Energies fall with time, so each band is one contiguous run.
    starts = np.flatnonzero(np.concatenate(([True], bands[1:] != bands[:-1])))
    return starts


def pareto_front(table: MeasurementTable, epsilon: float = 0.0, cap: Optional[int] = None) -> ParetoFront:
    """Exact (epsilon = 0) or epsilon-approximate front of all assignments.

    With ``epsilon > 0`` every exact front point has a retained point within a
    factor ``1 + epsilon`` in both time and energy.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    cap = front_cap() if cap is None else cap
    table = expand_repeats(table)
    cands = {i: candidate_set(table, i) for i in table.indices}
    # Most candidates first: tightens the intermediate fronts.
    order = sorted(table.indices, key=lambda i: (-len(cands[i]), i))
    delta = (1.0 + epsilon) ** (1.0 / max(len(order), 1)) - 1.0 if epsilon > 0 else 0.0

    times = np.zeros(1)
    energies = np.zeros(1)
    stages = []
    for idx in order:
        ct = np.array([s.time for _, s in cands[idx]])
        ce = np.array([s.energy for _, s in cands[idx]])
        n, m = len(times), len(ct)
        per_chunk = max(1, _CHUNK // max(n, 1))
        acc_t = acc_e = acc_parent = acc_cand = None
        for lo in range(0, m, per_chunk):
            js = np.arange(lo, min(m, lo + per_chunk))
            t = (times[None, :] + ct[js, None]).ravel()
            e = (energies[None, :] + ce[js, None]).ravel()
            parent = np.tile(np.arange(n), len(js))
            cand = np.repeat(js, n)
            if acc_t is not None:
                t = np.concatenate((acc_t, t))
                e = np.concatenate((acc_e, e))
                parent = np.concatenate((acc_parent, parent))
                cand = np.concatenate((acc_cand, cand))
            keep = _prune(t, e, cand * n + parent)
            acc_t, acc_e, acc_parent, acc_cand = t[keep], e[keep], parent[keep], cand[keep]
        keep = _thin(acc_t, acc_e, delta)
        times, energies = acc_t[keep], acc_e[keep]
        stages.append((acc_parent[keep], acc_cand[keep]))
        if len(times) > cap:
            hint = "raise --epsilon" if epsilon == 0 else "raise --epsilon further"
            raise FrontOverflow(
                f"Pareto front grew to {len(times)} points (cap {cap}) after kernel {idx}; {hint} "
                "or set CLOCKPLAN_FRONT_CAP"
            )
    return ParetoFront(table, order, [cands[i] for i in order], times, energies, stages, epsilon)


def _boundary_window(times, budget):
    """Front ids worth an exact check for the time budget (times sorted ascending)."""
    lo = np.searchsorted(times, budget * (1 - _REL_SLACK), side="left")
    hi = np.searchsorted(times, budget * (1 + _REL_SLACK), side="right")
    return list(range(max(lo - 1, 0), hi))


def min_energy_within(front: ParetoFront, time_budget: float) -> Optional[dict]:
    """Choices of the least-energy front point with time <= ``time_budget``, or None."""
    table = front.table
    best, best_key = None, None
    for i in _boundary_window(front.times, time_budget):
        choices = front.choices(i)
        totals = assignment_totals(table, choices)
        if totals.time > time_budget:
            continue
        key = (totals.energy, totals.time)
        if best is None or key < best_key:
            best, best_key = choices, key
    return best


def select_from_front(front: ParetoFront, objective: Objective, baseline: Totals) -> dict:
    """Choice dict of the best front point under ``objective``."""
    table = front.table
    if objective.kind is Goal.WASTE:
        ids = _boundary_window(front.times, objective.time_budget(baseline))
    else:
        products = front.times * front.energies
        best = products.min()
        ids = list(np.flatnonzero(products <= best * (1 + _REL_SLACK)))
    candidates = [front.choices(i) for i in ids]
    # The all-baseline assignment can be thinned away when epsilon > 0.
    candidates.append({i: BASELINE for i in table.indices})
    best = min(candidates, key=lambda c: _key(table, c, objective, baseline))
    if objective.kind is Goal.WASTE:
        totals = assignment_totals(table, best)
        if totals.time > objective.time_budget(baseline):
            raise Infeasible("no assignment meets the time budget")
    return best


def optimize_global(
    table: MeasurementTable,
    objective: Objective,
    epsilon: float = 0.0,
    cap: Optional[int] = None,
    front: Optional[ParetoFront] = None,
) -> Assignment:
    """Jointly optimal assignment; only the summed time has to meet the budget."""
    table = expand_repeats(table)
    baseline = baseline_totals(table)
    if front is None:
        front = pareto_front(table, epsilon, cap)
    choices = select_from_front(front, objective, baseline)
    return make_assignment(table, choices, objective, Strategy.GLOBAL, baseline)


def optimize_local(table: MeasurementTable, objective: Objective) -> Assignment:
    """Each kernel picks its own best config against its own baseline."""
    table = expand_repeats(table)
    choices = {}
    for idx in table.indices:
        base = table.samples[idx][BASELINE]
        base_totals = Totals(base.time, base.energy)
        choices[idx] = min(
            (c for c, _ in candidate_set(table, idx)),
            key=lambda c: objective_key(
                Totals(table.samples[idx][c].time, table.samples[idx][c].energy),
                objective, base_totals, configs=[c],
            ),
        )
    return make_assignment(table, choices, objective, Strategy.LOCAL)


def optimize_coarse(table: MeasurementTable, objective: Objective) -> Assignment:
    """Best single config applied to every kernel."""
    table = expand_repeats(table)
    baseline = baseline_totals(table)
    shared = common_configs(table)
    if not shared:
        raise NoCommonConfig("kernels share no measured config")
    best = min(
        shared,
        key=lambda c: objective_key(
            assignment_totals(table, {i: c for i in table.indices}), objective, baseline, configs=[c]
        ),
    )
    return make_assignment(table, {i: best for i in table.indices}, objective, Strategy.COARSE, baseline)


def optimize(table, objective, strategy, epsilon=0.0, cap=None) -> Assignment:
    strategy = Strategy(strategy)
    if strategy is Strategy.GLOBAL:
        return optimize_global(table, objective, epsilon, cap)
    if strategy is Strategy.LOCAL:
        return optimize_local(table, objective)
    return optimize_coarse(table, objective)


def brute_force(table: MeasurementTable, objective: Objective, cap: int = DEFAULT_BRUTE_FORCE_CAP) -> Assignment:
    """Exhaustive enumeration; test oracle for :func:`optimize_global`."""
    table = expand_repeats(table)
    baseline = baseline_totals(table)
    indices = table.indices
    cands = [candidate_set(table, i) for i in indices]
    sizes = [len(c) for c in cands]
    total = math.prod(sizes)
    if total > cap:
        raise InstanceTooLarge(f"{total} combinations exceed the brute-force cap {cap}")

    # Sums in kernel index order over the full mixed-radix grid.
    t = np.zeros(1)
    e = np.zeros(1)
    for cand in cands:
        t = np.add.outer(t, [s.time for _, s in cand]).ravel()
        e = np.add.outer(e, [s.energy for _, s in cand]).ravel()

    if objective.kind is Goal.WASTE:
        budget = objective.time_budget(baseline)
        sure = t < budget * (1 - _REL_SLACK)
        edge = np.flatnonzero(np.abs(t - budget) <= budget * _REL_SLACK)
        picks = list(edge)
        if sure.any():
            best_e = e[sure].min()
            picks += list(np.flatnonzero(sure & (e <= best_e * (1 + _REL_SLACK))))
    else:
        p = t * e
        picks = list(np.flatnonzero(p <= p.min() * (1 + _REL_SLACK)))
    if not picks:
        raise Infeasible("no assignment meets the time budget")

    def decode(flat):
        pos = np.unravel_index(flat, sizes)
        return {idx: cands[k][pos[k]][0] for k, idx in enumerate(indices)}

    best = min((decode(f) for f in picks), key=lambda c: _key(table, c, objective, baseline))
    result = make_assignment(table, best, objective, Strategy.GLOBAL, baseline)
    if objective.kind is Goal.WASTE and result.totals.time > objective.time_budget(baseline):
        raise Infeasible("no assignment meets the time budget")
    return result


def enumerate_totals(table: MeasurementTable) -> Iterable:
    """Every assignment's exact totals with its choices; small instances only."""
    table = expand_repeats(table)
    indices = table.indices
    cands = [candidate_set(table, i) for i in indices]
    for combo in itertools.product(*cands):
        yield totals_of(s for _, s in combo), {i: c for i, (c, _) in zip(indices, combo)}


# -- threshold sweep -------------------------------------------------------


@dataclass(frozen=True)
class SweepEntry:
    strategy: Strategy
    threshold: float
    time_pct: float
    energy_pct: float


@dataclass(frozen=True)
class SweepCurve:
    entries: tuple

    def for_strategy(self, strategy) -> list:
        strategy = Strategy(strategy)
        return [e for e in self.entries if e.strategy is strategy]


def threshold_sweep(
    table: MeasurementTable,
    strategies: Iterable = (Strategy.LOCAL, Strategy.GLOBAL),
    thresholds: Sequence[float] = (0.0,),
    epsilon: float = 0.0,
    cap: Optional[int] = None,
) -> SweepCurve:
    """Waste-optimal deltas per (strategy, threshold); the global front is built once."""
    thresholds = [float(x) for x in thresholds]
    if thresholds != sorted(thresholds):
        raise ValueError("thresholds must be sorted ascending")
    strategies = [Strategy(s) for s in strategies]
    table = expand_repeats(table)
    front = pareto_front(table, epsilon, cap) if Strategy.GLOBAL in strategies else None
    entries = []
    for strategy in strategies:
        for theta in thresholds:
            objective = Objective.waste(theta)
            if strategy is Strategy.GLOBAL:
                result = optimize_global(table, objective, front=front)
            else:
                result = optimize(table, objective, strategy)
            entries.append(SweepEntry(strategy, theta, result.deltas.time_pct, result.deltas.energy_pct))
    return SweepCurve(tuple(entries))


# -- validation under measurement noise -------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    repetitions: int
    planned: DeltaPct
    mean: DeltaPct
    min: DeltaPct
    max: DeltaPct
    plan_totals: tuple
    baseline_totals: tuple

    @property
    def pairs(self) -> int:
        return self.repetitions**2


def _stable_mean(values) -> float:
    # Exact when all values are equal.
    lo = min(values)
    return lo + math.fsum(v - lo for v in values) / len(values)


def _remeasure(table, choices, noise, rng, repetitions) -> list:
    indices = table.indices
    samples = [table.samples[i][choices[i]] for i in indices]
    if noise.is_zero:
        return [totals_of(samples) for _ in range(repetitions)]
    ft, fp = noise.factors(rng, (repetitions, len(indices)))
    out = []
    for r in range(repetitions):
        times = [s.time * ft[r, k] for k, s in enumerate(samples)]
        energies = [s.energy * ft[r, k] * fp[r, k] for k, s in enumerate(samples)]
        out.append(Totals(math.fsum(times), math.fsum(energies)))
    return out


def validate_assignment(
    truth: MeasurementTable,
    assignment: Assignment,
    noise: NoiseModel,
    repetitions: int = 10,
    seed: int = 0,
) -> ValidationReport:
    """Re-measure the plan and the baseline with noise; compare every plan/baseline pair."""
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    truth = expand_repeats(truth)
    if set(assignment.choices) != set(truth.indices):
        raise UnknownConfigInAssignment("assignment kernels do not match the table")
    for idx, config in assignment.choices.items():
        if config not in truth.samples[idx]:
            raise UnknownConfigInAssignment(f"kernel {idx}: {config} not measured in the table")

    rng = np.random.default_rng(seed)
    plans = _remeasure(truth, assignment.choices, noise, rng, repetitions)
    bases = _remeasure(truth, {i: BASELINE for i in truth.indices}, noise, rng, repetitions)
    dt = [pct_change(p.time, b.time) for p in plans for b in bases]
    de = [pct_change(p.energy, b.energy) for p in plans for b in bases]
    return ValidationReport(
        repetitions=repetitions,
        planned=assignment.deltas,
        mean=DeltaPct(_stable_mean(dt), _stable_mean(de)),
        min=DeltaPct(min(dt), min(de)),
        max=DeltaPct(max(dt), max(de)),
        plan_totals=tuple(plans),
        baseline_totals=tuple(bases),
    )
