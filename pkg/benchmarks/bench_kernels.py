"""Compare the compiled kernels with the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--events N] [--repeats R]
"""

import argparse
import time

import numpy as np

from secretshare import kernels
from secretshare.classical import _contributions
from secretshare.optics import ExperimentConfig, _assemble, _element_tables, _source


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--events", type=int, default=1_000_000)
    ap.add_argument("--repeats", type=int, default=3)
    a = ap.parse_args()

    backends = {"compiled": None, "python": kernels.get_backend("python")}
    try:
        backends["compiled"] = kernels.get_backend("compiled")
    except ImportError:
        del backends["compiled"]
        print("compiled extension not available; timing the fallback only")

    contrib = np.ascontiguousarray(_contributions("stoch"), dtype=np.intc)
    cfg = ExperimentConfig(task="det", family="partial", v=0.72)
    tabs, _ = _element_tables(cfg)
    rng = np.random.default_rng(0)
    n = a.events
    s, x, y, z = rng.integers(0, 4, n), rng.integers(0, 4, n), rng.integers(0, 4, n), rng.integers(0, 2, n)
    k1, p1, k2, p2 = _assemble(tabs, s, x, y, z)
    p1 += rng.normal(0, 1e-3, p1.shape)
    args = (np.ascontiguousarray(k1), np.ascontiguousarray(p1), np.ascontiguousarray(k2), np.ascontiguousarray(p2),
            np.ascontiguousarray(_source(cfg)), 0)

    results = {}
    print(f"{'kernel':<34}{'backend':<10}{'seconds':>10}")
    for name, mod in backends.items():
        t_enum, c = best_of(lambda: mod.enumerate_counts(contrib), a.repeats)
        t_prop, p = best_of(lambda: mod.propagate(*args), a.repeats)
        results[name] = (c, p)
        print(f"{'enumerate_counts (stochastic)':<34}{name:<10}{t_enum:>10.3f}")
        print(f"{f'propagate ({n} events)':<34}{name:<10}{t_prop:>10.3f}")
    if len(results) == 2:
        (c1, p1_), (c2, p2_) = results["compiled"], results["python"]
        print("counts identical:", bool(np.array_equal(c1, c2)))
        print(f"max probability difference: {np.max(np.abs(p1_ - p2_)):.2e}")


if __name__ == "__main__":
    main()
