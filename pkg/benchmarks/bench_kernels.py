"""Timing comparison of the compiled and pure-numpy kernel backends.

Runs each batched kernel on identical random inputs and reports the
per-call time for both implementations.  The compiled extension is
skipped with a note if it is not importable.

    python3 benchmarks/bench_kernels.py --n 3 --batch 4096 --repeats 20
"""

import argparse
import time

import numpy as np

from genkf._tables import blade_tables
from genkf import _kernels_py

try:
    from genkf import _kernels
except ImportError:
    _kernels = None


def make_inputs(t, batch, rng):
    size, dim = t.size, t.dim
    a = rng.standard_normal((batch, size)) + 1j * rng.standard_normal((batch, size))
    b = rng.standard_normal((batch, size)) + 1j * rng.standard_normal((batch, size))
    v = rng.standard_normal((batch, dim)) + 1j * rng.standard_normal((batch, dim))
    xi = rng.standard_normal((batch, dim)) + 1j * rng.standard_normal((batch, dim))
    return a, b, v, xi


def calls(t, a, b, v, xi):
    return [
        ("wedge_batch", lambda k: k.wedge_batch(t, a, b)),
        ("interior_batch", lambda k: k.interior_batch(t, v, a)),
        ("wedge1_batch", lambda k: k.wedge1_batch(t, xi, a)),
        ("clifford_batch", lambda k: k.clifford_batch(t, v, xi, a)),
        ("mukai_batch", lambda k: k.mukai_batch(t, a, b)),
    ]


def time_call(fn, impl, repeats):
    fn(impl)  # warm up
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(impl)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=3, help="letters per half-dimension")
    ap.add_argument("--batch", type=int, default=4096)
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    t = blade_tables(args.n)
    rng = np.random.default_rng(args.seed)
    a, b, v, xi = make_inputs(t, args.batch, rng)

    print(f"n={args.n} (size {t.size}), batch={args.batch}, best of {args.repeats}")
    header = f"{'kernel':<16} {'python':>12} {'compiled':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, fn in calls(t, a, b, v, xi):
        t_py = time_call(fn, _kernels_py, args.repeats)
        if _kernels is None:
            print(f"{name:<16} {t_py * 1e3:>10.3f}ms {'n/a':>12} {'n/a':>9}")
            continue
        t_cy = time_call(fn, _kernels, args.repeats)
        out_py = fn(_kernels_py)
        out_cy = fn(_kernels)
        worst = float(np.max(np.abs(np.asarray(out_py) - np.asarray(out_cy))))
        tag = "" if worst < 1e-12 * max(1.0, float(np.max(np.abs(out_py)))) else "  MISMATCH"
        print(
            f"{name:<16} {t_py * 1e3:>10.3f}ms {t_cy * 1e3:>10.3f}ms "
            f"{t_py / t_cy:>8.1f}x{tag}"
        )


if __name__ == "__main__":
    main()
