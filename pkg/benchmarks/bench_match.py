"""Timing comparison of the compiled and pure-Python block matchers.

Runs the same randomized matching workload through both backends, checks
that they agree pair for pair, and prints throughput. Usage:

    python benchmarks/bench_match.py [--pairs 2000] [--max-blocks 40]
"""

import argparse
import sys
import time

import numpy as np


def load_backends():
    """Import the compiled and the pure-Python kernel side by side."""
    from gesturetime.seqmetric import _match_py
    impls = {"python": _match_py.match_monotone}
    try:
        from gesturetime.seqmetric import _match_c
        impls["cython"] = _match_c.match_monotone
    except ImportError:
        pass
    return impls


def make_workload(rng, n_pairs, max_blocks, max_len=12):
    """Random same-class block tilings as (ps, pe, ts, te) start/end lists."""
    cases = []
    for _ in range(n_pairs):
        def tiling():
            n = int(rng.integers(1, max_blocks + 1))
            lens = rng.integers(1, max_len + 1, size=n)
            ends = np.cumsum(lens)
            starts = ends - lens
            # keep every other block so runs of one class are separated
            keep = slice(0, None, 2)
            return list(starts[keep]), list(ends[keep])
        ps, pe = tiling()
        ts, te = tiling()
        cases.append((ps, pe, ts, te))
    return cases


def bench(fn, cases, threshold, repeats=3):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = [fn(ps, pe, ts, te, threshold) for ps, pe, ts, te in cases]
        best = min(best, time.perf_counter() - t0)
    return best, result


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=2000)
    parser.add_argument("--max-blocks", type=int, default=40)
    parser.add_argument("--threshold", type=int, default=2)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    impls = load_backends()
    if "cython" not in impls:
        print("compiled kernel not importable; timing pure Python only")

    rng = np.random.default_rng(args.seed)
    cases = make_workload(rng, args.pairs, args.max_blocks)

    results = {}
    for name, fn in impls.items():
        secs, out = bench(fn, cases, args.threshold)
        results[name] = (secs, out)
        print(f"{name:>7}: {secs * 1e3:8.1f} ms total, "
              f"{secs / len(cases) * 1e6:7.1f} us/pair")

    if len(results) == 2:
        py = results["python"][1]
        cy = results["cython"][1]
        mismatches = sum(a != b for a, b in zip(py, cy))
        if mismatches:
            print(f"BACKEND MISMATCH on {mismatches}/{len(cases)} cases")
            return 1
        speedup = results["python"][0] / results["cython"][0]
        print(f"agreement: exact on all {len(cases)} cases; "
              f"compiled speedup {speedup:.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
