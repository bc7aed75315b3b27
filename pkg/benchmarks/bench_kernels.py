"""Compare the compiled and pure-Python kernels.

Usage: python benchmarks/bench_kernels.py [--repeat 5]

Times batch drawing, a single (i, j, S) test sweep over all witnesses, and a
full structure-learning run, checking that both backends agree on the result.
"""
import argparse
import statistics
import time

import numpy as np

from tpgraph import kernels
from tpgraph.learner import LearnerConfig, batch_size, learn_structure
from tpgraph.rng import stream_key
from tpgraph.stats import sample_gaussian
from tpgraph.synth import generate_chain, generate_random


def timeit(fn, repeat):
    times = []
    result = None
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - start)
    return statistics.median(times), result


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    try:
        backends = {"python": kernels.get_backend("python"), "cython": kernels.get_backend("cython")}
    except ImportError:
        print("compiled extension not built; only the Python backend is available")
        backends = {"python": kernels.get_backend("python")}

    n, p = 100_000, 20
    data = sample_gaussian(generate_random(p, 0.1, 1), n, 2).data
    m = batch_size(n, 7 / 9)
    key = stream_key(0)
    work = np.arange(n, dtype=np.int64)
    cond = np.array([3, 7, 11], dtype=np.int64)
    witnesses = np.array([k for k in range(p) if k not in (0, 1, 3, 7, 11)], dtype=np.int64)

    cases = {
        f"draw_rows x100 (n={n}, m={m})":
            lambda impl: [impl.draw_rows(key, t, n, m, work).sum() for t in range(100)],
        f"test_pair ({len(witnesses)} witnesses, |S|=3)":
            lambda impl: impl.test_pair(data, 0, 1, cond, witnesses, key, 0, m, False, 1e-12, True, work),
    }
    chain = sample_gaussian(generate_chain(30, 0.9), 50_000, 3)
    cases["learn_structure (chain p=30, N=50000)"] = lambda impl: learn_structure(
        chain, LearnerConfig(seed=1), backend="cython" if impl is backends.get("cython") else "python")

    print(f"{'case':<45}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, fn in cases.items():
        row, results = [], []
        for impl in backends.values():
            t, res = timeit(lambda: fn(impl), args.repeat)
            row.append(t)
            results.append(res)
        agree = all(_same(results[0], r) for r in results[1:])
        speed = f"{row[0] / row[-1]:>9.1f}x" if len(row) > 1 else ""
        print(f"{name:<45}" + "".join(f"{t * 1000:>10.2f}ms" for t in row) + speed + ("" if agree else "  MISMATCH"))


def _same(a, b):
    if isinstance(a, tuple) and len(a) == 2 and hasattr(a[1], "tests_run"):
        return a[0] == b[0] and a[1] == b[1]
    return a == b if not isinstance(a, list) else [int(x) for x in a] == [int(x) for x in b]


if __name__ == "__main__":
    main()
