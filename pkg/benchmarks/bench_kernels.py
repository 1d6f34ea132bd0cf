"""Benchmark the compiled kernels against the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--episodes N] [--repeat K]
"""
import argparse
import statistics
import time

import numpy as np

from rewardloop import grid, kernels
from rewardloop.kernels import pure


def build_problem():
    spec = grid.GridSpec(width=8, height=8, goal_cells=frozenset({(7, 7)}),
                         lava_cells=frozenset({(3, y) for y in range(1, 7)}),
                         wall_cells=frozenset({(5, 2), (5, 3), (5, 4)}),
                         start_cell=(0, 0), max_steps=64,
                         true_weights=grid.SHAPED_WEIGHTS)
    rewards, next_states, terminal = grid.build_tables(
        spec, lambda s, a: grid.true_reward(spec, s, a))
    start = grid.cell_index(spec, spec.start_cell)
    return rewards, next_states, terminal, start


def timed(fn, repeat):
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        samples.append(time.perf_counter() - t0)
    return out, min(samples), statistics.median(samples)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--episodes", type=int, default=5000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rewards, next_states, terminal, start = build_problem()
    if kernels.IMPL != "native":
        print("warning: compiled extension not available; "
              "comparing pure against itself")
    native = kernels

    cases = {
        "value_iteration": lambda impl: impl.value_iteration(
            rewards, next_states, terminal, 0.95),
        "q_learning": lambda impl: impl.q_learning(
            rewards, next_states, terminal, start, 0.95, 0.5, 0.2,
            args.episodes, 64, 7),
    }
    print(f"{'kernel':<18}{'native (ms)':>14}{'pure (ms)':>14}{'speedup':>10}")
    for name, call in cases.items():
        out_n, best_n, _ = timed(lambda: call(native), args.repeat)
        out_p, best_p, _ = timed(lambda: call(pure), args.repeat)
        assert np.array_equal(np.asarray(out_n), np.asarray(out_p)), (
            f"{name}: native and pure outputs differ")
        print(f"{name:<18}{best_n * 1e3:>14.3f}{best_p * 1e3:>14.3f}"
              f"{best_p / best_n:>10.1f}x")
    print(f"active implementation: {kernels.IMPL}; outputs bit-identical")


if __name__ == "__main__":
    main()
