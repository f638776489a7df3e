"""Synthetic DVFS cost model used as ground truth for tests and fixtures.

Time is roofline style, with the slower of the two clock domains setting it::

    time = max(core_work / f_core, mem_work / f_mem) + overhead

Power has a static part plus ``coeff * f * V(f)**2`` for each domain. V(f)
comes from a piecewise-linear voltage curve.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .measurements import (
    BASELINE,
    ClockConfig,
    Constraint,
    Kernel,
    MeasurementTable,
    Phase,
    Sample,
)

MHZ = 1e6


@dataclass(frozen=True)
class VoltageCurve:
    points: tuple

    def __post_init__(self):
        pts = tuple((float(f), float(v)) for f, v in self.points)
        if len(pts) < 2:
            raise ValueError("voltage curve needs at least 2 points")
        for (f0, v0), (f1, v1) in zip(pts, pts[1:]):
            if not (f1 > f0 and v1 > v0):
                raise ValueError("voltage curve must be strictly increasing in frequency and volts")
        if pts[0][1] <= 0:
            raise ValueError("volts must be positive")
        object.__setattr__(self, "points", pts)


DEFAULT_CURVE = VoltageCurve(((210, 0.60), (1470, 0.75), (2100, 1.00)))


def voltage(curve: VoltageCurve, f: float) -> float:
    pts = curve.points
    if f <= pts[0][0]:
        return pts[0][1]
    if f >= pts[-1][0]:
        return pts[-1][1]
    for (f0, v0), (f1, v1) in zip(pts, pts[1:]):
        if f <= f1:
            return v0 + (v1 - v0) * (f - f0) / (f1 - f0)
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class SimKernelSpec:
    core_work: float  # core cycles
    mem_work: float  # memory cycles
    overhead: float = 0.0  # seconds
    static_power: float = 0.0  # W
    core_coeff: float = 0.0  # W / (MHz * V^2)
    mem_coeff: float = 0.0  # W / (MHz * V^2)
    name: str = "kernel"
    phase: Phase = Phase.FORWARD
    repeat_count: int = 1

    def __post_init__(self):
        object.__setattr__(self, "phase", Phase(self.phase))
        numbers = (self.core_work, self.mem_work, self.overhead, self.static_power, self.core_coeff, self.mem_coeff)
        if any(x < 0 for x in numbers):
            raise ValueError("kernel spec parameters must be non-negative")
        if self.core_work <= 0 and self.mem_work <= 0:
            raise ValueError("one of core_work/mem_work must be positive")
        if self.repeat_count < 1:
            raise ValueError("repeat_count must be >= 1")


def modeled_power(spec: SimKernelSpec, f_core: float, f_mem: float, curve: VoltageCurve) -> float:
    return (
        spec.static_power
        + spec.core_coeff * f_core * voltage(curve, f_core) ** 2
        + spec.mem_coeff * f_mem * voltage(curve, f_mem) ** 2
    )


def modeled_time(spec: SimKernelSpec, f_core: float, f_mem: float) -> float:
    return max(spec.core_work / (f_core * MHZ), spec.mem_work / (f_mem * MHZ)) + spec.overhead


def sim_kernel(spec: SimKernelSpec, config, curve: VoltageCurve = DEFAULT_CURVE) -> Sample:
    """Noise-free sample at ``config = (f_core, f_mem)`` in MHz."""
    f_core, f_mem = config
    if f_core <= 0 or f_mem <= 0:
        raise ValueError("frequencies must be positive")
    time = modeled_time(spec, f_core, f_mem)
    return Sample(time, modeled_power(spec, f_core, f_mem, curve) * time)


class AutoPolicy(enum.Enum):
    MAX_CLOCKS = "max_clocks"
    THROTTLE_CAP = "throttle_cap"


@dataclass(frozen=True)
class ClockGrid:
    core_clocks: tuple = tuple(range(210, 2101, 210))
    mem_clocks: tuple = (405, 810, 5001, 9251, 9501)
    auto_policy: AutoPolicy = AutoPolicy.MAX_CLOCKS
    power_cap: Optional[float] = None  # W, ThrottleCap only
    constraints: tuple = (Constraint(405, 420),)

    def __post_init__(self):
        for label in ("core_clocks", "mem_clocks"):
            clocks = tuple(int(c) for c in getattr(self, label))
            if not clocks or list(clocks) != sorted(set(clocks)) or clocks[0] <= 0:
                raise ValueError(f"{label} must be non-empty, positive, ascending, without duplicates")
            object.__setattr__(self, label, clocks)
        object.__setattr__(self, "auto_policy", AutoPolicy(self.auto_policy))
        if self.auto_policy is AutoPolicy.THROTTLE_CAP and self.power_cap is None:
            raise ValueError("throttle_cap auto policy needs power_cap")
        object.__setattr__(self, "constraints", tuple(self.constraints))

    def configs(self) -> list:
        """Grid configs allowed by the constraints, as ClockConfig(mem, core)."""
        out = []
        for mem in self.mem_clocks:
            for core in self.core_clocks:
                config = ClockConfig(mem, core)
                if all(c.allows(config) for c in self.constraints):
                    out.append(config)
        return out


@dataclass(frozen=True)
class NoiseModel:
    """Independent multiplicative log-normal noise on time and on average power.

    Factors are ``exp(sigma * z - sigma**2 / 2)``, i.e. mean one, so a
    re-measurement is unbiased. Energy is the noisy power times the noisy time.
    """

    sigma_time: float = 0.0
    sigma_power: float = 0.0

    def __post_init__(self):
        if self.sigma_time < 0 or self.sigma_power < 0:
            raise ValueError("noise sigmas must be >= 0")

    @property
    def is_zero(self) -> bool:
        return self.sigma_time == 0 and self.sigma_power == 0

    def factors(self, rng: np.random.Generator, size=None):
        z = rng.standard_normal((2,) if size is None else (2,) + tuple(np.atleast_1d(size)))
        ft = np.exp(self.sigma_time * z[0] - self.sigma_time**2 / 2)
        fp = np.exp(self.sigma_power * z[1] - self.sigma_power**2 / 2)
        return ft, fp

    def perturb(self, sample: Sample, rng: np.random.Generator) -> Sample:
        if self.is_zero:
            return sample
        ft, fp = self.factors(rng)
        return Sample(sample.time * float(ft), sample.energy * float(ft) * float(fp))


def _resolve_auto(spec: SimKernelSpec, grid: ClockGrid, curve: VoltageCurve):
    """(f_core, f_mem) the hardware governor would pick."""
    if grid.auto_policy is AutoPolicy.MAX_CLOCKS:
        return grid.core_clocks[-1], grid.mem_clocks[-1]
    allowed = [
        (c.core, c.mem) for c in grid.configs()
        if modeled_power(spec, c.core, c.mem, curve) <= grid.power_cap
    ]
    if not allowed:
        return grid.core_clocks[0], grid.mem_clocks[0]
    return max(allowed)


def generate_table(
    specs: Sequence[SimKernelSpec],
    grid: ClockGrid = ClockGrid(),
    curve: VoltageCurve = DEFAULT_CURVE,
    noise: Optional[NoiseModel] = None,
    seed: int = 0,
    metadata: Optional[dict] = None,
) -> MeasurementTable:
    """One sample per (kernel, grid config) plus an (auto, auto) row.

    Each cell draws noise from its own stream keyed by ``(seed, kernel, cell)``,
    so results do not depend on evaluation order.
    """
    configs = grid.configs()
    kernels, samples = [], {}
    for index, spec in enumerate(specs):
        kernels.append(Kernel(index, spec.name, spec.phase, spec.repeat_count))
        rows = {}
        cells = [(config, (config.core, config.mem)) for config in configs]
        cells.append((BASELINE, _resolve_auto(spec, grid, curve)))
        for ordinal, (config, freqs) in enumerate(cells):
            sample = sim_kernel(spec, freqs, curve)
            if noise is not None and not noise.is_zero:
                # Auto cell gets its own stream id beyond the grid.
                rng = np.random.default_rng([seed, index, ordinal])
                sample = noise.perturb(sample, rng)
            rows[config] = sample
        samples[index] = rows
    return MeasurementTable(tuple(kernels), samples, grid.constraints, metadata or {})


def min_energy_config(spec: SimKernelSpec, grid: ClockGrid, curve: VoltageCurve = DEFAULT_CURVE):
    return min(grid.configs(), key=lambda c: sim_kernel(spec, (c.core, c.mem), curve).energy)


def random_specs(rng: np.random.Generator, n: int) -> list:
    """A mix of compute-bound, memory-bound and balanced kernels with realistic magnitudes."""
    specs = []
    for i in range(n):
        kind = rng.integers(3)
        base_cycles = rng.uniform(1e6, 5e7)
        if kind == 0:  # compute bound
            core, mem = base_cycles, base_cycles * rng.uniform(0.5, 2.5)
        elif kind == 1:  # memory bound
            core, mem = base_cycles * rng.uniform(0.1, 0.6), base_cycles * rng.uniform(6.0, 12.0)
        else:
            core, mem = base_cycles, base_cycles * rng.uniform(3.0, 6.0)
        specs.append(SimKernelSpec(
            core_work=core,
            mem_work=mem,
            overhead=rng.uniform(0, 2e-4),
            static_power=rng.uniform(40, 90),
            core_coeff=rng.uniform(0.08, 0.15),
            mem_coeff=rng.uniform(0.003, 0.008),
            name=f"k{i}",
            phase=Phase.FORWARD,
            repeat_count=1,
        ))
    return specs


def planted_specs() -> list:
    """One memory-bound and one compute-bound kernel."""
    return [
        SimKernelSpec(
            core_work=2.0e7, mem_work=9.0e8, overhead=0.0, static_power=60.0,
            core_coeff=0.12, mem_coeff=0.006, name="Permute", phase=Phase.FORWARD,
        ),
        SimKernelSpec(
            core_work=2.0e9, mem_work=1.5e9, overhead=0.0, static_power=60.0,
            core_coeff=0.12, mem_coeff=0.006, name="GEMM", phase=Phase.FORWARD,
        ),
    ]


# -- scenario JSON ---------------------------------------------------------


def _spec_to_dict(spec: SimKernelSpec) -> dict:
    return {
        "core_work": spec.core_work, "mem_work": spec.mem_work, "overhead": spec.overhead,
        "static_power": spec.static_power, "core_coeff": spec.core_coeff, "mem_coeff": spec.mem_coeff,
        "name": spec.name, "phase": spec.phase.value, "repeat_count": spec.repeat_count,
    }


@dataclass
class Scenario:
    specs: list
    grid: ClockGrid = field(default_factory=ClockGrid)
    curve: VoltageCurve = DEFAULT_CURVE
    noise: Optional[NoiseModel] = None
    seed: int = 0
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        grid_data = dict(data.get("grid", {}))
        if "auto_policy" in data:
            grid_data.setdefault("auto_policy", data["auto_policy"])
        if "constraints" in grid_data:
            grid_data["constraints"] = tuple(
                Constraint(int(c["mem"]), int(c["max_core"])) for c in grid_data["constraints"]
            )
        noise = data.get("noise")
        return cls(
            specs=[SimKernelSpec(**s) for s in data["specs"]],
            grid=ClockGrid(**grid_data),
            curve=VoltageCurve(tuple(map(tuple, data["curve"]))) if "curve" in data else DEFAULT_CURVE,
            noise=NoiseModel(**noise) if noise else None,
            seed=int(data.get("seed", 0)),
            metadata=dict(data.get("metadata", {})),
        )

    def to_dict(self) -> dict:
        return {
            "specs": [_spec_to_dict(s) for s in self.specs],
            "grid": {
                "core_clocks": list(self.grid.core_clocks),
                "mem_clocks": list(self.grid.mem_clocks),
                "power_cap": self.grid.power_cap,
                "constraints": [{"mem": c.mem, "max_core": c.max_core} for c in self.grid.constraints],
            },
            "curve": [list(p) for p in self.curve.points],
            "auto_policy": self.grid.auto_policy.value,
            "noise": None if self.noise is None else {
                "sigma_time": self.noise.sigma_time, "sigma_power": self.noise.sigma_power,
            },
            "seed": self.seed,
            "metadata": self.metadata,
        }

    def generate(self) -> MeasurementTable:
        return generate_table(self.specs, self.grid, self.curve, self.noise, self.seed, self.metadata)


def planted_scenario() -> Scenario:
    return Scenario(planted_specs(), metadata={"scenario": "planted"})
