"""Steps per second of the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--steps N] [--repeat R]

Each protocol runs a fixed step budget (the tolerance is unreachable) on the
same graph, seed and start for both backends, and the terminal errors are
checked for bitwise equality.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from gossiplab import backend
from gossiplab.harness import ExperimentConfig, run_experiment

CASES = [
    ("pairwise", {}),
    ("laplacian", {}),
    ("mrk", {"beta": 0.4}),
    ("shift-register", {"omega": 1.2}),
    ("gge", {}),
    ("block", {"tau": 5}),
    ("accgossip", {}),
]


def time_case(cfg: ExperimentConfig, name: str, repeat: int):
    best, traj = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        traj = run_experiment(cfg, backend=name)
        best = min(best, time.perf_counter() - t0)
    return traj.terminal_k / best, traj


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--steps", type=int, default=200_000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    names = backend.available()
    print(f"grid 10x10, {args.steps} steps, best of {args.repeat}; backends: {', '.join(names)}")
    print(f"{'protocol':<16}" + "".join(f"{n + ' steps/s':>20}" for n in names) + f"{'speedup':>10}")
    for protocol, extra in CASES:
        steps = args.steps if protocol != "block" else args.steps // 10
        cfg = ExperimentConfig(graph_family="grid", graph_rows=10, graph_cols=10, protocol=protocol,
                               epsilon=1e-300, max_iters=steps, seed=0, **extra)
        rates, finals = {}, {}
        for n in names:
            rates[n], traj = time_case(cfg, n, args.repeat if n != "python" else 1)
            finals[n] = traj.terminal_error
        row = f"{protocol:<16}" + "".join(f"{rates[n]:>20,.0f}" for n in names)
        if len(names) > 1:
            row += f"{rates['cython'] / rates['python']:>9.1f}x"
            if len(set(finals.values())) != 1:
                row += "  (results differ)"
        print(row)


if __name__ == "__main__":
    main()
