"""Compare the compiled geometry kernels with the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--n 200000] [--repeat 5] [--end-to-end]

Per-kernel timings call both backends on identical inputs and also report the
largest disagreement between them.  ``--end-to-end`` times the full space
suite in two subprocesses, one with ``HYPERMOD_PURE_PYTHON=1``.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from hypermod.kernels import get_backend


def _inputs(n, rng):
    E1, E2 = rng.normal(size=(n, 2)) * 5, rng.normal(size=(n, 2)) * 5
    U = rng.normal(size=(n, 2))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    H1 = np.column_stack([rng.normal(size=n) * 3, np.exp(rng.normal(size=n))])
    H2 = np.column_stack([rng.normal(size=n) * 3, np.exp(rng.normal(size=n))])
    S1 = np.column_stack([rng.integers(1, 8, n).astype(float), 5 * rng.random(n)])
    S2 = np.column_stack([rng.integers(1, 8, n).astype(float), 5 * rng.random(n)])
    T = rng.random(n)
    D = 5 * rng.random(n)
    A = 2 * np.pi * rng.random(n)
    J = rng.integers(1, 8, n).astype(float)
    return {
        "euclid_dist": (E1, E2),
        "euclid_combine": (E1, E2, T),
        "euclid_ray": (E1, U, D),
        "hp_dist": (H1, H2),
        "hp_combine": (H1, H2, T),
        "hp_ray": (H1, A, D),
        "star_dist": (S1, S2),
        "star_combine": (S1, S2, T),
        "star_ray": (S1, J, D),
    }


def bench(n: int, repeat: int, seed: int = 0) -> list:
    py = get_backend("python")
    try:
        cy = get_backend("cython")
    except ImportError:
        cy = None
    rows = []
    for name, args in _inputs(n, np.random.default_rng(seed)).items():
        args = tuple(np.ascontiguousarray(a) for a in args)
        t_py = min(timeit.repeat(lambda: getattr(py, name)(*args), number=1, repeat=repeat))
        if cy is None:
            rows.append((name, t_py, None, None))
            continue
        t_cy = min(timeit.repeat(lambda: getattr(cy, name)(*args), number=1, repeat=repeat))
        diff = float(np.max(np.abs(np.asarray(getattr(py, name)(*args)) - np.asarray(getattr(cy, name)(*args)))))
        rows.append((name, t_py, t_cy, diff))
    return rows


def end_to_end(trials: int) -> dict:
    code = ("import time; from hypermod.geometry import *; from hypermod.verify import verify_space;"
            "t=time.perf_counter();"
            f"[verify_space(s, {trials}) for s in (Euclidean(2), PoincareHalfPlane(), StarTree(5))];"
            "print(time.perf_counter()-t)")
    out = {}
    for label, env in (("cython", {}), ("python", {"HYPERMOD_PURE_PYTHON": "1"})):
        res = subprocess.run([sys.executable, "-c", code], env={**os.environ, **env},
                             capture_output=True, text=True, check=True)
        out[label] = float(res.stdout.strip())
    return out


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args(argv)
    print(f"{'kernel':<16}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}{'max |diff|':>14}")
    for name, t_py, t_cy, diff in bench(args.n, args.repeat):
        if t_cy is None:
            print(f"{name:<16}{1e3 * t_py:>14.2f}{'-':>14}{'-':>10}{'-':>14}")
        else:
            print(f"{name:<16}{1e3 * t_py:>14.2f}{1e3 * t_cy:>14.2f}{t_py / t_cy:>10.2f}{diff:>14.2e}")
    if args.end_to_end:
        e2e = end_to_end(100000)
        print(f"\nspace suite, 3 models x 1e5 trials: cython {e2e['cython']:.2f} s, python {e2e['python']:.2f} s")


if __name__ == "__main__":
    main()
