"""Kernel-level GPU DVFS planning: pick per-kernel clocks from time/energy measurements."""

__version__ = "0.1.0"

from .errors import ClockplanError  # noqa: E402
from .measurements import (  # noqa: E402
    AUTO,
    BASELINE,
    ClockConfig,
    DeltaPct,
    Kernel,
    MeasurementTable,
    Phase,
    Sample,
    Totals,
    baseline_totals,
    candidate_set,
    expand_repeats,
    load_table,
    parse_table,
    serialize_table,
)
from .metrics import Goal, Objective, compare, edp, waste_score  # noqa: E402
from .optimizer import (  # noqa: E402
    Assignment,
    Strategy,
    brute_force,
    optimize,
    optimize_coarse,
    optimize_global,
    optimize_local,
    pareto_front,
    threshold_sweep,
    validate_assignment,
)
from .scheduler import LatencyModel, build_schedule, prune_switches, schedule_cost  # noqa: E402
from .simulator import ClockGrid, NoiseModel, SimKernelSpec, VoltageCurve, generate_table, sim_kernel  # noqa: E402

__all__ = [
    "__version__",
    "ClockplanError",
    "AUTO",
    "BASELINE",
    "ClockConfig",
    "DeltaPct",
    "Kernel",
    "MeasurementTable",
    "Phase",
    "Sample",
    "Totals",
    "baseline_totals",
    "candidate_set",
    "expand_repeats",
    "load_table",
    "parse_table",
    "serialize_table",
    "Goal",
    "Objective",
    "compare",
    "edp",
    "waste_score",
    "Assignment",
    "Strategy",
    "brute_force",
    "optimize",
    "optimize_coarse",
    "optimize_global",
    "optimize_local",
    "pareto_front",
    "threshold_sweep",
    "validate_assignment",
    "LatencyModel",
    "build_schedule",
    "prune_switches",
    "schedule_cost",
    "ClockGrid",
    "NoiseModel",
    "SimKernelSpec",
    "VoltageCurve",
    "generate_table",
    "sim_kernel",
]
