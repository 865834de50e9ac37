"""Hot loops with a numba implementation and a pure-numpy fallback.

Set ``GMERELAX_NO_NUMBA=1`` to force the numpy versions (useful for debugging
and for platforms without numba).  Both versions are always importable from
this module under the ``*_numba`` / ``*_numpy`` names so they can be compared;
the unsuffixed names point at the selected implementation.
"""

from __future__ import annotations

import os

import numpy as np
from scipy import sparse

_DISABLED = os.environ.get("GMERELAX_NO_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:  # pragma: no cover - exercised implicitly
    if _DISABLED:
        raise ImportError("disabled by GMERELAX_NO_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


# --------------------------------------------------------------------------
# Schur complement accumulation over sparse constraint entries
#
# For Hermitian constraint matrices A_i with entries (row, a, b, val), the
# Schur complement of the HKM direction is
#     M[i, k] = Re Tr(A_i X A_k Zinv)
#             = Re sum_{p in i, q in k} val_p val_q X[b_p, a_q] Zinv[b_q, a_p].


@njit(cache=True)
def _schur_pairs_jit(rows, ia, ib, vals, X, Zinv, M):
    P = rows.shape[0]
    for p in range(P):
        rp = rows[p]
        ap = ia[p]
        bp = ib[p]
        vp = vals[p]
        for q in range(P):
            M[rp, rows[q]] += (vp * vals[q] * X[bp, ia[q]] * Zinv[ib[q], ap]).real


def schur_pairs_numba(rows, ia, ib, vals, X, Zinv, M) -> None:
    _schur_pairs_jit(rows, ia, ib, vals, X, Zinv, M)


def schur_pairs_numpy(rows, ia, ib, vals, X, Zinv, M, chunk: int = 512) -> None:
    P = rows.shape[0]
    m = M.shape[0]
    ind = sparse.csr_matrix((np.ones(P), (np.arange(P), rows)), shape=(P, m))
    for start in range(0, P, chunk):
        sl = slice(start, min(P, start + chunk))
        V = (vals[sl, None] * vals[None, :]
             * X[ib[sl, None], ia[None, :]] * Zinv[ib[None, :], ia[sl, None]]).real
        # M[rows[p], rows[q]] += V[p, q]
        VQ = (ind.T @ V.T).T  # (chunk, m)
        M += ind[sl].T @ VQ


# --------------------------------------------------------------------------
# Seesaw minimisation of <psi| W |psi> over product vectors a (x) b
#
# W is given as a tensor W[i, j, k, l] = <i j| W |k l> with the first index
# pair on the block and the second on the complement.  Each sweep fixes one
# factor and replaces the other by the lowest eigenvector of the reduced
# matrix.


@njit(cache=True)
def _seesaw_jit(W, a, b, max_iter, tol):
    da = W.shape[0]
    db = W.shape[1]
    prev = np.inf
    val = np.inf
    it = 0
    for it in range(max_iter):
        # reduce onto the first factor with b fixed
        Ra = np.zeros((da, da), dtype=np.complex128)
        for i in range(da):
            for k in range(da):
                s = 0j
                for j in range(db):
                    bj = np.conj(b[j])
                    for l in range(db):
                        s += bj * W[i, j, k, l] * b[l]
                Ra[i, k] = s
        Ra = 0.5 * (Ra + np.conj(Ra.T))
        w, v = np.linalg.eigh(Ra)
        a = v[:, 0].copy()
        Rb = np.zeros((db, db), dtype=np.complex128)
        for j in range(db):
            for l in range(db):
                s = 0j
                for i in range(da):
                    ai = np.conj(a[i])
                    for k in range(da):
                        s += ai * W[i, j, k, l] * a[k]
                Rb[j, l] = s
        Rb = 0.5 * (Rb + np.conj(Rb.T))
        w, v = np.linalg.eigh(Rb)
        b = v[:, 0].copy()
        val = w[0]
        if prev - val < tol:
            break
        prev = val
    return val, a, b, it + 1


def seesaw_numba(W, a, b, max_iter: int = 500, tol: float = 1e-10):
    W = np.ascontiguousarray(W, dtype=np.complex128)
    a = np.ascontiguousarray(a, dtype=np.complex128)
    b = np.ascontiguousarray(b, dtype=np.complex128)
    val, a, b, its = _seesaw_jit(W, a, b, max_iter, tol)
    return float(val), a, b, int(its)


def seesaw_numpy(W, a, b, max_iter: int = 500, tol: float = 1e-10):
    W = np.asarray(W, dtype=np.complex128)
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    prev = np.inf
    val = np.inf
    it = 0
    for it in range(max_iter):
        Ra = np.einsum("j,ijkl,l->ik", b.conj(), W, b)
        w, v = np.linalg.eigh(0.5 * (Ra + Ra.conj().T))
        a = v[:, 0]
        Rb = np.einsum("i,ijkl,k->jl", a.conj(), W, a)
        w, v = np.linalg.eigh(0.5 * (Rb + Rb.conj().T))
        b = v[:, 0]
        val = float(w[0])
        if prev - val < tol:
            break
        prev = val
    return val, a, b, it + 1


if HAVE_NUMBA:
    schur_pairs = schur_pairs_numba
    seesaw = seesaw_numba
else:  # pragma: no cover
    schur_pairs = schur_pairs_numpy
    seesaw = seesaw_numpy

BACKEND = "numba" if HAVE_NUMBA else "numpy"
