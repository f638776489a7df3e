import numpy as np
import pytest

from clockplan.measurements import BASELINE, ClockConfig, Constraint
from clockplan.metrics import Objective
from clockplan.optimizer import optimize_global
from clockplan.simulator import (
    DEFAULT_CURVE,
    AutoPolicy,
    ClockGrid,
    NoiseModel,
    Scenario,
    SimKernelSpec,
    VoltageCurve,
    generate_table,
    min_energy_config,
    modeled_power,
    planted_scenario,
    random_specs,
    sim_kernel,
    voltage,
)


def interp_power(spec, f_core, f_mem, curve):
    xs = [p[0] for p in curve.points]
    ys = [p[1] for p in curve.points]
    v = lambda f: float(np.interp(f, xs, ys))  # noqa: E731
    return spec.static_power + spec.core_coeff * f_core * v(f_core) ** 2 + spec.mem_coeff * f_mem * v(f_mem) ** 2


LINEAR = VoltageCurve(((210, 0.60), (2100, 1.00)))

COMPUTE_BOUND = SimKernelSpec(
    core_work=2.1e9, mem_work=1e7, static_power=50, core_coeff=0.1, mem_coeff=0.005, name="GEMM"
)


def test_voltage_examples():
    assert voltage(LINEAR, 210) == 0.60
    assert voltage(LINEAR, 1155) == pytest.approx(0.80, abs=1e-15)
    assert voltage(LINEAR, 3000) == 1.00
    assert voltage(LINEAR, 100) == 0.60
    assert voltage(DEFAULT_CURVE, 1470) == 0.75


def test_voltage_curve_validation():
    with pytest.raises(ValueError):
        VoltageCurve(((210, 0.6),))
    with pytest.raises(ValueError):
        VoltageCurve(((210, 0.6), (200, 0.7)))
    with pytest.raises(ValueError):
        VoltageCurve(((210, 0.6), (400, 0.6)))


def test_sim_kernel_analytic_time():
    spec = SimKernelSpec(core_work=2.1e9, mem_work=0, overhead=0)
    assert sim_kernel(spec, (2100, 9501)).time == 1.0


def test_compute_bound_mem_invariance_and_energy():
    grid = ClockGrid(constraints=())
    for core in grid.core_clocks:
        samples = [sim_kernel(COMPUTE_BOUND, (core, mem)) for mem in grid.mem_clocks]
        assert len({s.time for s in samples}) == 1
        energies = [s.energy for s in samples]  # ascending mem
        assert all(a < b for a, b in zip(energies, energies[1:]))


def test_halving_core_doubles_time():
    full = sim_kernel(COMPUTE_BOUND, (2100, 9501)).time
    half = sim_kernel(COMPUTE_BOUND, (1050, 9501)).time
    assert half == pytest.approx(2 * full, rel=1e-12)


def test_power_closed_form_every_grid_point():
    grid = ClockGrid()
    for spec in random_specs(np.random.default_rng(5), 6):
        for c in grid.configs():
            got = modeled_power(spec, c.core, c.mem, DEFAULT_CURVE)
            assert got == pytest.approx(interp_power(spec, c.core, c.mem, DEFAULT_CURVE), rel=1e-12)


def test_time_and_power_monotone():
    grid = ClockGrid(constraints=())
    for spec in random_specs(np.random.default_rng(9), 8):
        for mem in grid.mem_clocks:
            ts = [sim_kernel(spec, (c, mem)) for c in grid.core_clocks]
            assert all(a.time >= b.time for a, b in zip(ts, ts[1:]))
            assert all(a.power <= b.power * (1 + 1e-12) for a, b in zip(ts, ts[1:]))
        for core in grid.core_clocks:
            ts = [sim_kernel(spec, (core, m)) for m in grid.mem_clocks]
            assert all(a.time >= b.time for a, b in zip(ts, ts[1:]))
            assert all(a.power <= b.power * (1 + 1e-12) for a, b in zip(ts, ts[1:]))


def test_some_kernel_has_interior_energy_optimum():
    grid = ClockGrid()
    specs = random_specs(np.random.default_rng(0), 12)
    interior = [
        min_energy_config(s, grid).core not in (grid.core_clocks[0], grid.core_clocks[-1]) for s in specs
    ]
    assert any(interior)


def test_generate_counts_and_auto():
    grid = ClockGrid(core_clocks=(1050, 2100), mem_clocks=(5001, 9501), constraints=())
    table = generate_table([COMPUTE_BOUND], grid)
    assert len(table.samples[0]) == 5
    assert table.samples[0][BASELINE] == table.samples[0][ClockConfig(9501, 2100)]


def test_default_grid_respects_405_constraint():
    table = generate_table(random_specs(np.random.default_rng(1), 2))
    configs = table.configs()
    assert ClockConfig(405, 420) in configs and ClockConfig(405, 630) not in configs
    assert Constraint(405, 420) in table.constraints
    # 10 core clocks x 4 mem clocks + 2 (405 MHz) + auto
    assert len(table.samples[0]) == 43


def test_throttle_cap_auto():
    grid = ClockGrid(core_clocks=(1050, 2100), mem_clocks=(5001, 9501), constraints=(),
                     auto_policy=AutoPolicy.THROTTLE_CAP, power_cap=200.0)
    table = generate_table([COMPUTE_BOUND], grid)
    allowed = [c for c in grid.configs() if modeled_power(COMPUTE_BOUND, c.core, c.mem, DEFAULT_CURVE) <= 200]
    best = max(allowed, key=lambda c: (c.core, c.mem))
    assert table.samples[0][BASELINE] == table.samples[0][best]


def test_generation_deterministic_and_noisy():
    specs = random_specs(np.random.default_rng(2), 3)
    noise = NoiseModel(0.01, 0.02)
    a = generate_table(specs, noise=noise, seed=4)
    assert a == generate_table(specs, noise=noise, seed=4)
    assert a != generate_table(specs, noise=noise, seed=5)
    clean = generate_table(specs)
    assert clean.samples[0][BASELINE] == sim_kernel(specs[0], (2100, 9501))


def test_noise_streams_independent_of_kernel_order():
    specs = random_specs(np.random.default_rng(2), 3)
    noise = NoiseModel(0.01, 0.02)
    full = generate_table(specs, noise=noise, seed=4)
    first_only = generate_table(specs[:1], noise=noise, seed=4)
    assert full.samples[0] == first_only.samples[0]


def test_planted_optimum_structure():
    table = planted_scenario().generate()
    grid = ClockGrid()
    a = optimize_global(table, Objective.waste(0.0))
    memory_bound, compute_bound = a.choices[0], a.choices[1]
    # memory-bound kernel: core clock lowered, memory clock at maximum
    assert memory_bound.core != "auto" and memory_bound.core < grid.core_clocks[-1]
    assert memory_bound.mem in ("auto", grid.mem_clocks[-1])
    # compute-bound kernel: memory clock lowered, core clock at maximum
    assert compute_bound.mem != "auto" and compute_bound.mem < grid.mem_clocks[-1]
    assert compute_bound.core in ("auto", grid.core_clocks[-1])
    assert a.deltas.time_pct <= 0 and a.deltas.energy_pct < 0


def test_scenario_round_trip():
    s = planted_scenario()
    again = Scenario.from_dict(s.to_dict())
    assert again.generate() == s.generate()


def test_spec_validation():
    with pytest.raises(ValueError):
        SimKernelSpec(core_work=0, mem_work=0)
    with pytest.raises(ValueError):
        SimKernelSpec(core_work=1, mem_work=1, static_power=-1)
    with pytest.raises(ValueError):
        ClockGrid(core_clocks=(2100, 210))
