"""Measurement tables: per-kernel time and energy across GPU clock configurations.

A table maps ``(kernel index, ClockConfig)`` to a :class:`Sample`. Kernel
identity is positional; two kernels may share a name but differ in cost.

CSV layout (header required, ``#`` starts a comment line)::

    index,name,phase,repeat_count,mem_clock,core_clock,time,energy

``time`` and ``energy`` headers may carry a unit suffix, e.g. ``time[ms]`` or
``energy[mJ]``; values are normalized to seconds and joules on ingest.
Constraints and free-form metadata live in an optional JSON sidecar::

    {"constraints": [{"mem": 405, "max_core": 420}], "metadata": {...}}
"""

from __future__ import annotations

import csv
import enum
import io
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Optional, Union

from .errors import (
    ConstraintViolation,
    DuplicateRow,
    MalformedRecord,
    MissingBaseline,
    NonPositiveSample,
    UnknownKernel,
)

log = logging.getLogger(__name__)

AUTO = "auto"

Clock = Union[int, str]  # MHz, or AUTO

TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6}
ENERGY_UNITS = {"j": 1.0, "mj": 1e-3}

COLUMNS = ("index", "name", "phase", "repeat_count", "mem_clock", "core_clock", "time", "energy")


class Phase(enum.Enum):
    EMBEDDING = "embedding"
    FORWARD = "forward"
    LOSS = "loss"
    BACKWARD = "backward"
    EMBEDDING_BACKWARD = "embedding_backward"
    PASS = "pass"


def parse_clock(value) -> Clock:
    """Parse ``"auto"`` or a positive integer MHz value."""
    if isinstance(value, str):
        text = value.strip().lower()
        if text == AUTO:
            return AUTO
        try:
            value = int(text)
        except ValueError:
            raise ValueError(f"clock must be 'auto' or an integer MHz value, got {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"clock must be 'auto' or an integer MHz value, got {value!r}")
    if value <= 0:
        raise ValueError(f"clock frequency must be positive, got {value}")
    return value


def _clock_key(clock: Clock):
    # Auto first, then descending MHz.
    return (0, 0) if clock == AUTO else (1, -clock)


@dataclass(frozen=True)
class ClockConfig:
    mem: Clock = AUTO
    core: Clock = AUTO

    def __post_init__(self):
        object.__setattr__(self, "mem", parse_clock(self.mem))
        object.__setattr__(self, "core", parse_clock(self.core))

    @property
    def is_baseline(self) -> bool:
        return self.mem == AUTO and self.core == AUTO

    def sort_key(self):
        return (_clock_key(self.mem), _clock_key(self.core))

    def __str__(self):
        return f"({self.mem}, {self.core})"


BASELINE = ClockConfig(AUTO, AUTO)


@dataclass(frozen=True)
class Kernel:
    index: int
    name: str
    phase: Phase = Phase.FORWARD
    repeat_count: int = 1


@dataclass(frozen=True)
class Sample:
    time: float
    energy: float

    @property
    def power(self) -> float:
        return self.energy / self.time

    def scaled(self, factor: float) -> "Sample":
        return Sample(self.time * factor, self.energy * factor)


@dataclass(frozen=True)
class Constraint:
    """``mem`` clock (MHz) is only reachable with core clock <= ``max_core``."""

    mem: int
    max_core: int

    def allows(self, config: ClockConfig) -> bool:
        if config.mem != self.mem or config.core == AUTO:
            return True
        return config.core <= self.max_core


@dataclass(frozen=True)
class Totals:
    time: float
    energy: float

    def __add__(self, other: "Totals") -> "Totals":
        return Totals(self.time + other.time, self.energy + other.energy)


@dataclass(frozen=True)
class DeltaPct:
    """Signed percent change vs. a baseline; negative means a reduction."""

    time_pct: float
    energy_pct: float

    @classmethod
    def between(cls, value: Totals, baseline: Totals) -> "DeltaPct":
        return cls(pct_change(value.time, baseline.time), pct_change(value.energy, baseline.energy))


def pct_change(value: float, baseline: float) -> float:
    return (value - baseline) / baseline * 100.0


@dataclass(frozen=True)
class MeasurementTable:
    kernels: tuple
    samples: Mapping[int, Mapping[ClockConfig, Sample]]
    constraints: tuple = ()
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kernels", tuple(sorted(self.kernels, key=lambda k: k.index)))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        self._validate()

    def _validate(self):
        seen = set()
        for kernel in self.kernels:
            if kernel.index in seen:
                raise MalformedRecord(f"duplicate kernel index {kernel.index}")
            seen.add(kernel.index)
            if kernel.repeat_count < 1:
                raise MalformedRecord(f"kernel {kernel.index}: repeat_count must be >= 1")
            rows = self.samples.get(kernel.index, {})
            if BASELINE not in rows:
                raise MissingBaseline(f"kernel {kernel.index} ({kernel.name}) has no (auto, auto) sample")
            for config, sample in rows.items():
                _check_sample(sample, f"kernel {kernel.index} at {config}")
                if not self.allows(config):
                    raise ConstraintViolation(f"kernel {kernel.index}: {config} violates a clock constraint")
        extra = set(self.samples) - seen
        if extra:
            raise MalformedRecord(f"samples reference unknown kernels {sorted(extra)}")

    def allows(self, config: ClockConfig) -> bool:
        return all(c.allows(config) for c in self.constraints)

    def kernel(self, index: int) -> Kernel:
        for kernel in self.kernels:
            if kernel.index == index:
                return kernel
        raise UnknownKernel(f"no kernel with index {index}")

    def sample(self, index: int, config: ClockConfig) -> Sample:
        return self.samples[index][config]

    @property
    def indices(self) -> list:
        return [k.index for k in self.kernels]

    def configs(self) -> list:
        """Every config measured for at least one kernel, in canonical order."""
        found = {c for rows in self.samples.values() for c in rows}
        return sorted(found, key=ClockConfig.sort_key)


def _check_sample(sample: Sample, where: str, line=None):
    for label, value in (("time", sample.time), ("energy", sample.energy)):
        if not math.isfinite(value) or value <= 0:
            raise NonPositiveSample(f"{where}: {label} must be positive and finite, got {value!r}", line)


def _unit_scale(header: str, base: str, units: dict, line: int):
    name = header.strip()
    if name == base:
        return 1.0
    if name.startswith(base + "[") and name.endswith("]"):
        unit = name[len(base) + 1 : -1].strip()
        scale = units.get(unit.lower())
        if scale is not None:
            return scale
    raise MalformedRecord(f"unrecognized column {header!r}", line)


def parse_table(text: str, sidecar: Optional[Mapping] = None) -> MeasurementTable:
    """Parse measurement CSV text (plus optional sidecar dict) into a validated table."""
    lines = [(n, raw) for n, raw in enumerate(text.splitlines(), start=1)]
    body = [(n, raw) for n, raw in lines if raw.strip() and not raw.lstrip().startswith("#")]
    if not body:
        raise MalformedRecord("empty document: header row required")

    header_line, header_raw = body[0]
    header = next(csv.reader([header_raw]))
    columns = {}
    time_scale = energy_scale = None
    for pos, name in enumerate(header):
        key = name.strip()
        if key.startswith("time"):
            time_scale = _unit_scale(key, "time", TIME_UNITS, header_line)
            key = "time"
        elif key.startswith("energy"):
            energy_scale = _unit_scale(key, "energy", ENERGY_UNITS, header_line)
            key = "energy"
        if key in columns:
            raise MalformedRecord(f"duplicate column {key!r}", header_line)
        columns[key] = pos
    missing = [c for c in COLUMNS if c not in columns]
    if missing:
        raise MalformedRecord(f"missing columns {missing}", header_line)

    constraints = tuple(
        Constraint(int(c["mem"]), int(c["max_core"])) for c in (sidecar or {}).get("constraints", [])
    )
    metadata = dict((sidecar or {}).get("metadata", {}))

    kernels = {}
    samples = {}
    for line, raw in body[1:]:
        row = next(csv.reader([raw]))
        if len(row) != len(header):
            raise MalformedRecord(f"expected {len(header)} fields, got {len(row)}", line)
        get = lambda col: row[columns[col]].strip()  # noqa: E731
        try:
            index = int(get("index"))
            phase = Phase(get("phase").lower())
            repeat = int(get("repeat_count"))
            config = ClockConfig(parse_clock(get("mem_clock")), parse_clock(get("core_clock")))
            sample = Sample(float(get("time")) * time_scale, float(get("energy")) * energy_scale)
        except ValueError as exc:
            raise MalformedRecord(str(exc), line) from None
        if index < 0:
            raise MalformedRecord(f"negative kernel index {index}", line)
        if repeat < 1:
            raise MalformedRecord(f"repeat_count must be >= 1, got {repeat}", line)
        kernel = Kernel(index, get("name"), phase, repeat)
        known = kernels.setdefault(index, kernel)
        if known != kernel:
            raise MalformedRecord(f"kernel {index} redeclared with different name/phase/repeat_count", line)
        _check_sample(sample, f"kernel {index} at {config}", line)
        if not all(c.allows(config) for c in constraints):
            raise ConstraintViolation(f"kernel {index}: {config} violates a clock constraint", line)
        rows = samples.setdefault(index, {})
        if config in rows:
            raise DuplicateRow(f"duplicate row for kernel {index} at {config}", line)
        rows[config] = sample

    table = MeasurementTable(tuple(kernels.values()), samples, constraints, metadata)
    _warn_sparse(table)
    return table


def _warn_sparse(table: MeasurementTable):
    every = set(table.configs())
    sparse = [k.index for k in table.kernels if every - set(table.samples[k.index])]
    if sparse:
        log.warning(
            "%d of %d kernels lack some configs (first: kernel %d); missing cells are excluded from candidates",
            len(sparse), len(table.kernels), sparse[0],
        )


def serialize_table(table: MeasurementTable) -> str:
    """CSV text in canonical units (s, J); constraints/metadata go to :func:`sidecar_of`."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(COLUMNS)
    for kernel in table.kernels:
        for config, sample in candidate_set(table, kernel.index):
            writer.writerow([
                kernel.index, kernel.name, kernel.phase.value, kernel.repeat_count,
                config.mem, config.core, repr(sample.time), repr(sample.energy),
            ])
    return out.getvalue()


def sidecar_of(table: MeasurementTable) -> dict:
    return {
        "constraints": [{"mem": c.mem, "max_core": c.max_core} for c in table.constraints],
        "metadata": dict(table.metadata),
    }


def sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".meta.json")


def load_table(path, sidecar=None) -> MeasurementTable:
    """Read a CSV file; the sidecar defaults to ``<stem>.meta.json`` when present."""
    path = Path(path)
    side = Path(sidecar) if sidecar is not None else sidecar_path(path)
    meta = None
    if sidecar is not None or side.exists():
        meta = json.loads(side.read_text())
    return parse_table(path.read_text(), meta)


def write_table(table: MeasurementTable, path) -> None:
    path = Path(path)
    path.write_text(serialize_table(table))
    side = sidecar_of(table)
    if side["constraints"] or side["metadata"]:
        sidecar_path(path).write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")


def expand_repeats(table: MeasurementTable) -> MeasurementTable:
    """Fold each kernel's repeat_count into its samples; result has all counts equal to 1."""
    if all(k.repeat_count == 1 for k in table.kernels):
        return table
    samples = {}
    for kernel in table.kernels:
        n = kernel.repeat_count
        samples[kernel.index] = {c: s.scaled(n) for c, s in table.samples[kernel.index].items()}
    kernels = tuple(replace(k, repeat_count=1) for k in table.kernels)
    return MeasurementTable(kernels, samples, table.constraints, table.metadata)


def totals_of(samples: Iterable[Sample]) -> Totals:
    # fsum: correctly rounded, so totals do not depend on summation order.
    samples = list(samples)
    return Totals(math.fsum(s.time for s in samples), math.fsum(s.energy for s in samples))


def assignment_totals(table: MeasurementTable, choices: Mapping[int, ClockConfig]) -> Totals:
    return totals_of(table.samples[i][choices[i]] for i in table.indices)


def baseline_totals(table: MeasurementTable) -> Totals:
    """Sum of (auto, auto) samples, repeat counts included."""
    parts = []
    for kernel in table.kernels:
        rows = table.samples.get(kernel.index, {})
        if BASELINE not in rows:
            raise MissingBaseline(f"kernel {kernel.index} has no (auto, auto) sample")
        parts.append(rows[BASELINE].scaled(kernel.repeat_count))
    return totals_of(parts)


def candidate_set(table: MeasurementTable, index: int) -> list:
    """Measured ``(config, sample)`` pairs for one kernel, mem desc then core desc, auto first."""
    if index not in table.samples:
        raise UnknownKernel(f"no kernel with index {index}")
    rows = table.samples[index]
    return [(c, rows[c]) for c in sorted(rows, key=ClockConfig.sort_key) if table.allows(c)]


def common_configs(table: MeasurementTable, indices=None) -> list:
    indices = table.indices if indices is None else indices
    shared = None
    for i in indices:
        configs = {c for c, _ in candidate_set(table, i)}
        shared = configs if shared is None else shared & configs
    return sorted(shared or (), key=ClockConfig.sort_key)


def aggregate_phases(table: MeasurementTable) -> MeasurementTable:
    """Collapse each phase into one pass-level pseudo-kernel.

    Only configs measured for every kernel of a phase survive; the phase's
    sample at a config is the repeat-weighted sum over its kernels.
    """
    table = expand_repeats(table)
    groups = {}
    for kernel in table.kernels:
        groups.setdefault(kernel.phase, []).append(kernel.index)
    kernels, samples = [], {}
    for ordinal, (phase, members) in enumerate(groups.items()):
        kernels.append(Kernel(ordinal, phase.value, Phase.PASS, 1))
        samples[ordinal] = {
            c: totals_to_sample(totals_of(table.samples[i][c] for i in members))
            for c in common_configs(table, members)
        }
    return MeasurementTable(tuple(kernels), samples, table.constraints, table.metadata)


def totals_to_sample(totals: Totals) -> Sample:
    return Sample(totals.time, totals.energy)
