"""Compare the numba kernels against their numpy fallbacks.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is run once to trigger compilation, then timed ``--repeat`` times;
the best wall time is reported.  The two backends must agree on every input,
so a disagreement aborts the run.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from gmerelax import _kernels
from gmerelax.hermitian import group_parties
from gmerelax.lmi import hermitian_basis
from gmerelax.states import make_rng


def best_time(fn, repeat: int) -> float:
    fn()  # warm-up, includes JIT compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def random_psd(n, rng):
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return G @ G.conj().T + np.eye(n)


def schur_case(n: int, m: int, seed: int):
    rng = make_rng(seed, n)
    B = hermitian_basis(n)
    coef = rng.normal(size=(m, len(B)))
    coef[np.abs(coef) < 1.5] = 0.0
    A = np.einsum("ip,pab->iab", coef, B).reshape(m, n * n)
    rows, cols = np.nonzero(A)
    args = (rows.astype(np.int64), (cols // n).astype(np.int64), (cols % n).astype(np.int64),
            np.ascontiguousarray(A[rows, cols]))
    X = random_psd(n, rng)
    Zinv = np.linalg.inv(random_psd(n, rng))
    return args, X, Zinv, m


def bench_schur(repeat: int) -> list[tuple]:
    out = []
    for n, m in [(9, 40), (16, 120), (27, 80)]:
        args, X, Zinv, m = schur_case(n, m, 1)
        results = {}
        timings = {}
        for name, fn in (("numba", _kernels.schur_pairs_numba), ("numpy", _kernels.schur_pairs_numpy)):
            M = np.zeros((m, m))

            def run(fn=fn, M=M):
                M[:] = 0.0
                fn(*args, X, Zinv, M)

            timings[name] = best_time(run, repeat)
            results[name] = M.copy()
        err = np.max(np.abs(results["numba"] - results["numpy"]))
        if err > 1e-9 * max(1.0, np.max(np.abs(results["numpy"]))):
            raise SystemExit(f"schur_pairs backends disagree (n={n}, m={m}): {err:.3e}")
        out.append((f"schur_pairs n={n} m={m} nnz={args[0].size}", timings["numba"], timings["numpy"]))
    return out


def bench_seesaw(repeat: int) -> list[tuple]:
    out = []
    for dims, block in [((3, 3), [0]), ((4, 4), [0]), ((3, 3, 3), [0])]:
        rng = make_rng(2, len(dims), dims[0])
        n = int(np.prod(dims))
        H = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        W = np.ascontiguousarray(group_parties((H + H.conj().T) / 2, dims, block))
        starts = []
        for _ in range(32):
            a = rng.normal(size=W.shape[0]) + 1j * rng.normal(size=W.shape[0])
            b = rng.normal(size=W.shape[1]) + 1j * rng.normal(size=W.shape[1])
            starts.append((a / np.linalg.norm(a), b / np.linalg.norm(b)))
        timings, values = {}, {}
        for name, fn in (("numba", _kernels.seesaw_numba), ("numpy", _kernels.seesaw_numpy)):
            def run(fn=fn, name=name):
                values[name] = min(fn(W, a, b, 500, 1e-12)[0] for a, b in starts)

            timings[name] = best_time(run, repeat)
        if abs(values["numba"] - values["numpy"]) > 1e-9:
            raise SystemExit(f"seesaw backends disagree for dims {dims}")
        out.append((f"seesaw dims={dims} x32 starts", timings["numba"], timings["numpy"]))
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is unavailable or disabled (GMERELAX_NO_NUMBA); nothing to compare")
    rows = bench_schur(args.repeat) + bench_seesaw(args.repeat)
    width = max(len(r[0]) for r in rows)
    print(f"{'kernel'.ljust(width)}  {'numba [ms]':>11}  {'numpy [ms]':>11}  {'speedup':>8}")
    for label, t_jit, t_np in rows:
        print(f"{label.ljust(width)}  {1e3 * t_jit:11.3f}  {1e3 * t_np:11.3f}  {t_np / t_jit:8.1f}x")


if __name__ == "__main__":
    main()
