"""Objective functions: energy-delay product and compute waste.

Waste is scored against a reference (the auto baseline by default): an
option is feasible when its time stays within ``(1 + threshold)`` of the
reference time, and among feasible options less energy is better.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

from .measurements import ClockConfig, Totals


class Goal(enum.Enum):
    WASTE = "waste"
    EDP = "edp"


@dataclass(frozen=True)
class Objective:
    kind: Goal = Goal.WASTE
    time_loss_threshold: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Goal(self.kind))
        if not self.time_loss_threshold >= 0:
            raise ValueError(f"threshold must be >= 0, got {self.time_loss_threshold}")

    @classmethod
    def waste(cls, threshold: float = 0.0) -> "Objective":
        return cls(Goal.WASTE, threshold)

    @classmethod
    def edp(cls) -> "Objective":
        return cls(Goal.EDP, 0.0)

    def time_budget(self, baseline: Totals) -> float:
        return (1.0 + self.time_loss_threshold) * baseline.time


@dataclass(frozen=True)
class WasteScore:
    energy_saved: float
    feasible: bool


def edp(totals: Totals) -> float:
    return totals.time * totals.energy


def waste_score(totals: Totals, baseline: Totals, threshold: float = 0.0) -> WasteScore:
    feasible = totals.time <= (1.0 + threshold) * baseline.time
    return WasteScore(baseline.energy - totals.energy, feasible)


def clock_vector_key(configs: Optional[Sequence[ClockConfig]]):
    if configs is None:
        return ()
    return tuple(c.sort_key() for c in configs)


def objective_key(
    totals: Totals,
    objective: Objective,
    baseline: Totals,
    switches: Optional[int] = None,
    configs: Optional[Sequence[ClockConfig]] = None,
):
    """Sort key: smaller is better.

    Ties on the objective fall back to lower time, then fewer switches (when
    known), then the lexicographically lower clock vector.
    """
    if objective.kind is Goal.EDP:
        head = (edp(totals),)
    else:
        score = waste_score(totals, baseline, objective.time_loss_threshold)
        head = (not score.feasible, -score.energy_saved)
    return head + (totals.time, switches if switches is not None else 0, clock_vector_key(configs))


def compare(
    a: Totals,
    b: Totals,
    objective: Objective,
    baseline: Totals,
    a_configs: Optional[Sequence[ClockConfig]] = None,
    b_configs: Optional[Sequence[ClockConfig]] = None,
) -> int:
    """-1 if ``a`` is preferred, 1 if ``b`` is, 0 on a full tie."""
    ka = objective_key(a, objective, baseline, configs=a_configs)
    kb = objective_key(b, objective, baseline, configs=b_configs)
    return (ka > kb) - (ka < kb)


def objective_value(totals: Totals, objective: Objective, baseline: Totals) -> float:
    """Scalar the optimizers minimize: EDP, or energy for Waste (feasibility checked separately)."""
    if objective.kind is Goal.EDP:
        return edp(totals)
    return totals.energy
