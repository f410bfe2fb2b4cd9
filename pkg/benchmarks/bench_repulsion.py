"""Time one Barnes-Hut repulsion pass per backend and check they agree.

Usage: python benchmarks/bench_repulsion.py [--sizes 1000 5000 10000] [--threads 1 4]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from debatenet.layout import BACKENDS, build_quadtree
from debatenet.layout import _backend


def clustered_positions(n: int, rng) -> np.ndarray:
    centres = rng.normal(scale=50.0, size=(5, 2))
    return centres[rng.integers(5, size=n)] + rng.normal(scale=8.0, size=(n, 2))


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1000, 5000, 10000])
    ap.add_argument("--threads", type=int, nargs="+", default=[1, 4])
    ap.add_argument("--theta", type=float, default=1.2)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    print(f"backends: {sorted(BACKENDS)}")
    print(f"{'n':>7} {'tree ms':>8} " + " ".join(f"{b + '/' + str(t):>12}" for b in sorted(BACKENDS) for t in args.threads) + "  identical")
    for n in args.sizes:
        pos = clustered_positions(n, rng)
        mass = rng.integers(1, 20, size=n).astype(float)
        tree_t = best_of(lambda: build_quadtree(pos, mass), args.repeat)
        tree = build_quadtree(pos, mass)
        cells, results = [], []
        for name in sorted(BACKENDS):
            kernel = _backend.get(name)
            for t in args.threads:
                cells.append(best_of(lambda: kernel.bh_repulsion(pos, mass, tree, 2.0, args.theta, t), args.repeat))
                results.append(kernel.bh_repulsion(pos, mass, tree, 2.0, args.theta, t))
        same = all(np.array_equal(results[0], r) for r in results[1:])
        print(f"{n:>7} {tree_t * 1e3:>8.1f} " + " ".join(f"{c * 1e3:>10.1f}ms" for c in cells) + f"  {same}")


if __name__ == "__main__":
    main()
