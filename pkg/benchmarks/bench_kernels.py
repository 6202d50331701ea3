"""Compare the compiled and pure-Python kernels on synthetic tax graphs.

    python benchmarks/bench_kernels.py --n 40 80 165 --repeat 3
"""

import argparse
import statistics
import time

import numpy as np

from conduit import kernels
from conduit.centrality import betweenness_centrality, load_centrality
from conduit.graph import build_directed
from conduit.registry import generate_synthetic


def timed(fn, repeat):
    times = []
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), result


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[40, 80, 165])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--profile", default="uniform", choices=["uniform", "planted_communities", "zero_heavy"])
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)

    backends = ["python"] + (["cython"] if kernels.compiled is not None else [])
    if len(backends) == 1:
        print("compiled kernels not built; timing the fallback only")
    print(f"{'n':>5} {'kind':<12} " + " ".join(f"{b:>10}" for b in backends) + f" {'speedup':>8} identical")
    for n in args.n:
        g = build_directed(generate_synthetic(n, 0, args.profile))
        for name, fn in (("load", load_centrality), ("betweenness", betweenness_centrality)):
            times, results = [], []
            for b in backends:
                t, r = timed(lambda: fn(g, backend=b, threads=args.threads), args.repeat)
                times.append(t)
                results.append(r.raw)
            same = all(np.array_equal(results[0], r) for r in results[1:])
            speed = f"{times[0] / times[-1]:8.1f}x" if len(times) > 1 else f"{'-':>9}"
            print(f"{n:>5} {name:<12} " + " ".join(f"{t:10.4f}" for t in times) + f" {speed} {same}")


if __name__ == "__main__":
    main()
