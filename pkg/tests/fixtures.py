"""Table builders shared by the test modules."""

import numpy as np

from clockplan.measurements import (
    BASELINE,
    ClockConfig,
    Kernel,
    MeasurementTable,
    Phase,
    Sample,
)

TWO_KERNEL_CSV = """\
# kernel A: (0.98, 0.80) or (0.97, 0.85); kernel B: (1.01, 0.65) or baseline
index,name,phase,repeat_count,mem_clock,core_clock,time,energy
0,A,forward,1,auto,auto,1.0,1.0
0,A,forward,1,9501,1890,0.98,0.80
0,A,forward,1,9251,1890,0.97,0.85
1,B,forward,1,auto,auto,1.0,1.0
1,B,forward,1,5001,auto,1.01,0.65
"""

A1 = ClockConfig(9501, 1890)
A2 = ClockConfig(9251, 1890)
B1 = ClockConfig(5001, "auto")

# One GPT-2 training step: (name, phase, mem, core, time %, energy %) per kernel, in execution order.
GPT2_PLAN = [
    ("WTE & WPE", "embedding", "auto", 630, +0.32, -33.01),
    ("Layernorm", "embedding", "auto", 1050, +0.77, -29.20),
    ("GEMM", "forward", 5001, "auto", -2.36, -15.41),
    ("Permute", "forward", 9501, 1680, +1.52, -10.83),
    ("GEMM", "forward", 9501, "auto", -1.78, -2.74),
    ("Softmax", "forward", 9501, 1050, -0.03, -11.97),
    ("GEMM", "forward", 9251, "auto", -1.27, -4.55),
    ("Permute", "forward", 9251, "auto", -1.42, -5.68),
    ("GEMM", "forward", 5001, "auto", -2.08, -14.54),
    ("Residual", "forward", "auto", 840, +0.59, -30.97),
    ("GEMM", "forward", 5001, "auto", -2.67, -15.21),
    ("GELU", "forward", 9501, 630, +0.03, -33.21),
    ("GEMM", "forward", 5001, "auto", -3.02, -13.77),
    ("Residual", "forward", 9501, 1050, +0.43, -32.49),
    ("GEMM", "loss", 5001, "auto", -2.60, -15.72),
    ("Softmax", "loss", 9501, 1680, +1.98, -26.65),
    ("GEMM", "loss", 9251, "auto", -0.96, -7.75),
    ("GEMM", "loss", 5001, 1680, +8.98, -29.31),
    ("Layernorm", "loss", "auto", 1260, +1.92, -29.05),
    ("GELU", "backward", 9501, 630, +0.03, -33.14),
    ("Bias", "backward", "auto", 1260, +0.88, -31.87),
    ("Bias reduce", "backward", "auto", "auto", +0.00, +0.00),
    ("GEMM", "backward", 5001, "auto", -2.73, -15.36),
    ("GELU", "backward", 9501, 840, -0.04, -26.88),
    ("GEMM", "backward", 5001, 1680, +10.13, -30.80),
    ("Bias", "backward", "auto", 1050, +0.42, -31.34),
    ("GEMM", "backward", 5001, "auto", -2.68, -13.30),
    ("GEMM", "backward", 9251, "auto", -1.65, -6.77),
    ("Layernorm", "backward", "auto", 1260, +1.89, -29.42),
    ("Bias", "backward", 9501, 1260, +0.88, -32.68),
    ("Bias reduce", "backward", "auto", "auto", +0.00, +0.00),
    ("GEMM", "backward", 5001, "auto", -2.46, -14.19),
    ("GEMM", "backward", 5001, "auto", -2.08, -12.42),
    ("Permute", "backward", 9501, "auto", -0.31, -5.99),
    ("GEMM", "backward", 9501, "auto", -1.85, -2.70),
    ("GEMM", "backward", 9251, "auto", -0.67, -6.11),
    ("Softmax", "backward", 9501, "auto", -0.17, -5.23),
    ("GEMM", "backward", 9251, "auto", -1.52, -3.51),
    ("GEMM", "backward", 9501, "auto", -0.53, -5.55),
    ("Permute", "backward", 9501, 1470, +2.62, -18.35),
    ("Bias", "backward", "auto", 1260, +0.60, -30.72),
    ("GEMM", "backward", 5001, 1680, +9.03, -29.34),
    ("GEMM", "backward", 9501, "auto", -1.72, -6.77),
    ("Layernorm", "backward", 9501, 1260, +1.86, -30.49),
    ("WPE", "embedding_backward", 9501, 1260, +2.37, -31.35),
    ("WTE", "embedding_backward", "auto", 1680, +7.25, -28.37),
]

LAYERS = 24


def gpt2_repeat(index: int) -> int:
    return LAYERS if 2 <= index <= 13 or 19 <= index <= 43 else 1


def gpt2_configs():
    return [ClockConfig(mem, core) for _, _, mem, core, _, _ in GPT2_PLAN]


def gpt2_csv() -> str:
    """46 kernels: baseline, the planned config, and two slower distractors each."""
    lines = ["index,name,phase,repeat_count,mem_clock,core_clock,time[ms],energy[mJ]"]
    for i, (name, phase, mem, core, dt, de) in enumerate(GPT2_PLAN):
        t_ms = 0.5 + 0.25 * (i % 7)
        e_mj = t_ms * (250 + 10 * (i % 5))
        rows = [("auto", "auto", t_ms, e_mj)]
        if (mem, core) != ("auto", "auto"):
            rows.append((mem, core, t_ms * (1 + dt / 100), e_mj * (1 + de / 100)))
        for d_mem, d_core, ft, fe in ((9501, 2100, 1.004, 1.02), (810, 420, 3.0, 1.4)):
            if (d_mem, d_core) != (mem, core):
                rows.append((d_mem, d_core, t_ms * ft, e_mj * fe))
        for m, c, t, e in rows:
            lines.append(f"{i},{name},{phase},{gpt2_repeat(i)},{m},{c},{t!r},{e!r}")
    return "\n".join(lines) + "\n"


def random_table(rng: np.random.Generator, n_kernels: int, n_configs: int) -> MeasurementTable:
    """Baseline plus ``n_configs - 1`` random configs per kernel (all configs shared)."""
    grid = [ClockConfig(m, c) for m in (9501, 9251, 5001, 810) for c in range(420, 2101, 210)]
    picks = rng.choice(len(grid), size=n_configs - 1, replace=False)
    configs = [grid[p] for p in sorted(picks)]
    kernels, samples = [], {}
    for i in range(n_kernels):
        kernels.append(Kernel(i, f"k{i}", Phase.FORWARD, 1))
        t0 = rng.uniform(0.5, 2.0)
        e0 = t0 * rng.uniform(200, 300)
        rows = {BASELINE: Sample(t0, e0)}
        for c in configs:
            rows[c] = Sample(t0 * rng.uniform(0.93, 1.15), e0 * rng.uniform(0.65, 1.05))
        samples[i] = rows
    return MeasurementTable(tuple(kernels), samples)


def only_baseline_table(n: int = 3) -> MeasurementTable:
    kernels = tuple(Kernel(i, f"k{i}") for i in range(n))
    samples = {i: {BASELINE: Sample(1.0 + i, 100.0 * (i + 1))} for i in range(n)}
    return MeasurementTable(kernels, samples)
