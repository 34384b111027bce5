"""Benchmark the hot kernels: compiled extension vs NumPy fallback.

These three kernels sit inside every bandwidth-grid search, benchmark repeat
and verification trial, so they dominate end-to-end runtime.  Usage:

    python benchmarks/backend_bench.py [--sizes small,medium,large]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from selreg.backend import _numpy

try:
    from selreg.backend import _ckernels
except ImportError:
    _ckernels = None

SIZES = {
    "small": (200, 500, 5),
    "medium": (1000, 2000, 10),
    "large": (2000, 8000, 15),
}


def _time(fn, *args, repeats: int = 5) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_size(label: str, nq: int, m: int, d: int) -> None:
    rng = np.random.default_rng(0)
    q = rng.normal(size=(nq, d))
    p = rng.normal(size=(m, d))
    v = np.abs(rng.normal(size=m))
    k = min(50, m)

    cases = [
        ("pairwise_sq_dists", (q, p)),
        ("knn_mean", (q, p, v, k)),
        ("gaussian_nw", (q, p, v, 1.0)),
    ]
    print(f"\n== {label}: {nq} queries x {m} points, d={d} ==")
    print(f"{'kernel':20s} {'numpy':>10s} {'compiled':>10s} {'speedup':>8s}")
    for name, args in cases:
        t_np = _time(getattr(_numpy, name), *args)
        if _ckernels is not None:
            t_c = _time(getattr(_ckernels, name), *args)
            np.testing.assert_allclose(
                getattr(_ckernels, name)(*args), getattr(_numpy, name)(*args), rtol=1e-9
            )
            print(f"{name:20s} {t_np*1e3:9.2f}ms {t_c*1e3:9.2f}ms {t_np/t_c:7.2f}x")
        else:
            print(f"{name:20s} {t_np*1e3:9.2f}ms {'n/a':>10s} {'n/a':>8s}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="small,medium", help=f"subset of {sorted(SIZES)}")
    args = parser.parse_args()
    if _ckernels is None:
        print("compiled kernels not built (run `python setup.py build_ext --inplace`);"
              " timing the NumPy fallback only")
    for label in args.sizes.split(","):
        nq, m, d = SIZES[label.strip()]
        bench_size(label.strip(), nq, m, d)


if __name__ == "__main__":
    main()
