"""Time the numba kernels against their pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is run once per implementation to warm up (JIT compilation), then
timed as the best of ``--repeat`` runs. Results from both implementations are
compared before timing so a speedup never hides a disagreement.
"""

import argparse
import time

import numpy as np

from inhchannel import kernels
from inhchannel.simulator import office_plan


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def crossing_case(rng, links):
    plan = office_plan(120.0, 50.0, wall_rows=4, door_spacing=10.0)
    p = rng.uniform([0, 0], [120, 50], (links, 2))
    q = rng.uniform([0, 0], [120, 50], (links, 2))
    walls = plan.wall_array()
    return (p, q, walls), f"{links} links x {len(walls)} walls"


def scan_case(rng, samples, grid_points):
    d = np.exp(rng.uniform(np.log(1.5), np.log(60.0), samples))
    f = rng.choice([6.0, 28.0, 73.0], samples)
    D, F = 10 * np.log10(d), 10 * np.log10(f)
    y = np.where(d <= 6.9, 17.0 * np.log10(d), 17.0 * np.log10(6.9) + 41.7 * np.log10(d / 6.9)) + 33.0 + 2.49 * F
    y = y + rng.normal(0.0, 7.78, samples)
    ones = np.ones((samples, 1))
    C = np.column_stack([ones[:, 0], F])
    grid = 10 * np.log10(np.geomspace(2.0, 50.0, grid_points))
    return (D, y, ones, ones, C, grid, 2), f"{samples} samples x {grid_points} breakpoints"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; install the 'fast' extra to benchmark")

    rng = np.random.default_rng(args.seed)
    cases = [
        ("crossing_matrix", kernels._crossing_matrix_numba, kernels._crossing_matrix_numpy, *crossing_case(rng, 20_000)),
        ("crossing_matrix", kernels._crossing_matrix_numba, kernels._crossing_matrix_numpy, *crossing_case(rng, 200_000)),
        ("scan_breakpoints", kernels._scan_breakpoints_numba, kernels._scan_breakpoints_numpy, *scan_case(rng, 20_000, 50)),
        ("scan_breakpoints", kernels._scan_breakpoints_numba, kernels._scan_breakpoints_numpy, *scan_case(rng, 200_000, 200)),
    ]
    print(f"{'kernel':<18} {'size':<34} {'numba s':>10} {'numpy s':>10} {'speedup':>8}")
    for name, fast, slow, case_args, size in cases:
        a, b = fast(*case_args), slow(*case_args)  # warm-up and agreement check
        for x, y in zip(a, b):
            if x.dtype == bool:
                assert np.array_equal(x, y), name
            else:
                assert np.allclose(x, y, rtol=1e-7, atol=1e-9, equal_nan=True), name
        t_fast = best_of(lambda: fast(*case_args), args.repeat)
        t_slow = best_of(lambda: slow(*case_args), args.repeat)
        print(f"{name:<18} {size:<34} {t_fast:>10.4f} {t_slow:>10.4f} {t_slow / t_fast:>7.1f}x")


if __name__ == "__main__":
    main()
