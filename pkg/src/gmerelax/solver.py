"""Primal-dual interior point solver for semidefinite programs.

Problems are stated in the standard primal form

    minimize    sum_j <C_j, X_j> + c_u . u
    subject to  sum_j <A_ij, X_j> + a_i . u = b_i      (i = 1..m)
                X_j positive semidefinite,  u free,

with dual

    maximize    b . y
    subject to  Z_j = C_j - sum_i y_i A_ij  positive semidefinite,
                a^T y = c_u.

Blocks may be real symmetric or complex Hermitian; complex blocks are handled
natively instead of through the real embedding of doubled size (the embedding
is still available through ``solve(..., real_embedding=True)``).

The method is an infeasible-start path-following scheme with the HKM search
direction and Mehrotra's predictor-corrector step.  Constraint matrices are
stored per block as sparse matrices whose i-th row is the row-major
vectorisation of ``A_ij``.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Sequence

import numpy as np
import scipy.linalg as sla
from scipy import sparse

from ._kernels import schur_pairs

log = logging.getLogger(__name__)

STEP_FRACTION = 0.98
INFEASIBILITY_TOL = 1e-8


class Status(str, Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    NUMERICAL_LIMIT = "NumericalLimit"

    def __str__(self) -> str:
        return self.value


class SolverError(RuntimeError):
    """A solve did not reach an optimal point; carries the partial solution."""

    def __init__(self, message: str, solution: "SdpSolution | None" = None):
        super().__init__(message)
        self.solution = solution


@dataclass
class SdpProblem:
    C: list[np.ndarray]
    A: list[sparse.csr_matrix]
    b: np.ndarray
    free_cost: np.ndarray | None = None
    free_A: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.b = np.asarray(self.b, dtype=float).ravel()
        m = self.b.shape[0]
        if m == 0:
            raise ValueError("problem has no equality constraints")
        if len(self.C) != len(self.A) or not self.C:
            raise ValueError("need one cost matrix and one constraint matrix per block")
        C, A = [], []
        for Cj, Aj in zip(self.C, self.A):
            Cj = np.asarray(Cj)
            Aj = sparse.csr_matrix(Aj)
            n = Cj.shape[0]
            if Cj.shape != (n, n) or Aj.shape != (m, n * n):
                raise ValueError(
                    f"block shapes inconsistent: C {Cj.shape}, A {Aj.shape}, m={m}"
                )
            is_complex = np.iscomplexobj(Cj) and np.any(Cj.imag != 0)
            is_complex = is_complex or (np.iscomplexobj(Aj.data) and np.any(Aj.data.imag != 0))
            dtype = complex if is_complex else float
            C.append(np.array(Cj if is_complex else Cj.real, dtype=dtype))
            A.append(sparse.csr_matrix(Aj if is_complex else Aj.real, dtype=dtype))
        self.C, self.A = C, A
        if self.free_A is None:
            self.free_A = np.zeros((m, 0))
        self.free_A = np.asarray(self.free_A, dtype=float).reshape(m, -1)
        f = self.free_A.shape[1]
        if self.free_cost is None:
            self.free_cost = np.zeros(f)
        self.free_cost = np.asarray(self.free_cost, dtype=float).ravel()
        if self.free_cost.shape != (f,):
            raise ValueError("free_cost does not match free_A")

    @property
    def m(self) -> int:
        return self.b.shape[0]

    @property
    def block_dims(self) -> list[int]:
        return [c.shape[0] for c in self.C]

    # operators --------------------------------------------------------------

    def apply_A(self, X: Sequence[np.ndarray]) -> np.ndarray:
        """``(sum_j <A_ij, X_j>)_i`` without the free-variable part."""
        out = np.zeros(self.m)
        for AjH, Xj in zip(self._AH, X):
            out += (AjH @ Xj.ravel()).real
        return out

    def apply_At(self, y: np.ndarray) -> list[np.ndarray]:
        return [(AjT @ y).reshape(n, n) for AjT, n in zip(self._AT, self.block_dims)]

    def objective(self, X: Sequence[np.ndarray], u: np.ndarray) -> float:
        return math.fsum(float(np.vdot(Cj, Xj).real) for Cj, Xj in zip(self.C, X)) + float(
            self.free_cost @ u
        )

    @property
    def _AH(self):
        if not hasattr(self, "_cache_AH"):
            self._cache_AH = [Aj.conj().tocsr() for Aj in self.A]
        return self._cache_AH

    @property
    def _AT(self):
        if not hasattr(self, "_cache_AT"):
            self._cache_AT = [Aj.T.tocsr() for Aj in self.A]
        return self._cache_AT


@dataclass
class SdpSolution:
    status: Status
    X: list[np.ndarray]
    u: np.ndarray
    y: np.ndarray
    Z: list[np.ndarray]
    primal_objective: float
    dual_objective: float
    iterations: int
    primal_infeasibility: float
    dual_infeasibility: float
    gap: float
    message: str = ""
    history: list[dict] = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass
class CertificateReport:
    primal_residual: float
    dual_residual: float
    gap: float
    min_eig_X: float
    min_eig_Z: float
    complementarity: float

    def ok(self, tol: float = 1e-6) -> bool:
        return (
            self.primal_residual <= tol
            and self.dual_residual <= tol
            and self.gap <= tol
            and self.min_eig_X >= -tol
            and self.min_eig_Z >= -tol
        )


# ----------------------------------------------------------------------------
# presolve


def _check_hermitian_rows(problem: SdpProblem) -> None:
    for j, (Aj, n) in enumerate(zip(problem.A, problem.block_dims)):
        idx = np.arange(n * n)
        perm = (idx % n) * n + idx // n
        diff = Aj - Aj[:, perm].conj()
        if diff.nnz and np.max(np.abs(diff.data)) > 1e-12 * max(1.0, np.max(np.abs(Aj.data))):
            raise ValueError(f"constraint matrices of block {j} are not Hermitian")
        Cj = problem.C[j]
        if np.max(np.abs(Cj - Cj.conj().T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(Cj))):
            raise ValueError(f"cost matrix of block {j} is not Hermitian")


def _check_rank(problem: SdpProblem) -> None:
    m = problem.m
    gram = sparse.csr_matrix((m, m))
    for Aj, AjH in zip(problem.A, problem._AH):
        gram = gram + (AjH @ Aj.T).real
    gram = gram.toarray()
    scale = max(np.max(np.diag(gram)), 1e-300)
    try:
        L = np.linalg.cholesky(gram + 1e-14 * scale * np.eye(m))
    except np.linalg.LinAlgError:
        raise ValueError("equality constraints are linearly dependent") from None
    if np.min(np.diag(L)) ** 2 < 1e-11 * scale:
        raise ValueError("equality constraints are linearly dependent")
    f = problem.free_A.shape[1]
    if f:
        s = np.linalg.svd(problem.free_A, compute_uv=False)
        if s.size < f or s[-1] <= 1e-12 * max(s[0], 1e-300):
            raise ValueError("free-variable columns are linearly dependent")


# ----------------------------------------------------------------------------
# Schur complement


class _SchurBlock:
    """Precomputed data for one block's contribution to ``M``."""

    def __init__(self, Aj: sparse.csr_matrix, n: int):
        nz_rows = np.unique(Aj.nonzero()[0])
        self.rows = nz_rows
        self.sub = Aj[nz_rows]
        self.subH = self.sub.conj().tocsr()
        nnz = self.sub.nnz
        dense_cost = float(n) ** 4 + nnz * float(n) ** 2
        pair_cost = float(nnz) ** 2
        self.dense = n <= 40 and dense_cost <= 4 * pair_cost or n * n <= 64
        if not self.dense:
            coo = self.sub.tocoo()
            self.prow = coo.row.astype(np.int64)
            self.pa = (coo.col // n).astype(np.int64)
            self.pb = (coo.col % n).astype(np.int64)
            self.pval = coo.data

    def add_to(self, M: np.ndarray, X: np.ndarray, Zinv: np.ndarray) -> None:
        if self.rows.size == 0:
            return
        if self.dense:
            K = np.kron(X, Zinv.T)
            T = self.subH @ K  # (r, n^2)
            Mb = (self.sub @ T.T).real.T
        else:
            Mb = np.zeros((self.rows.size, self.rows.size))
            schur_pairs(self.prow, self.pa, self.pb, self.pval,
                        np.ascontiguousarray(X), np.ascontiguousarray(Zinv), Mb)
        M[np.ix_(self.rows, self.rows)] += Mb


# ----------------------------------------------------------------------------
# the solver


def _sym(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.conj().T)


def _max_step(L: np.ndarray, D: np.ndarray) -> float:
    """Largest alpha with ``L L^H + alpha D`` PSD."""
    Y = sla.solve_triangular(L, D, lower=True)
    W = sla.solve_triangular(L, Y.conj().T, lower=True)
    lam = np.linalg.eigvalsh(_sym(W))[0]
    return math.inf if lam >= 0 else -1.0 / lam


def _inner(A: Sequence[np.ndarray], B: Sequence[np.ndarray]) -> float:
    return math.fsum(float(np.vdot(a, b).real) for a, b in zip(A, B))


def _fro(blocks: Sequence[np.ndarray]) -> float:
    return math.sqrt(math.fsum(float(np.vdot(a, a).real) for a in blocks))


def _open_trace(trace):
    if trace is None:
        env = os.environ.get("GMERELAX_SOLVER_TRACE")
        if not env:
            return None, False
        trace = env
    if isinstance(trace, (str, os.PathLike)):
        return open(trace, "a", encoding="utf-8"), True
    return trace, False


def solve(problem: SdpProblem, tol: float = 1e-7, max_iter: int = 200, *,
          real_embedding: bool = False, trace: str | IO[str] | None = None,
          presolve: bool = True) -> SdpSolution:
    """Solve ``problem``; see the module docstring for the conventions.

    ``trace`` (a path or writable text stream, or the ``GMERELAX_SOLVER_TRACE``
    environment variable) receives one JSON line per iteration.
    """
    if real_embedding:
        embedded, complex_mask = embed_real(problem)
        sol = solve(embedded, tol, max_iter, trace=trace, presolve=presolve)
        return _unembed_solution(sol, complex_mask)
    if presolve:
        _check_hermitian_rows(problem)
        _check_rank(problem)
    stream, owned = _open_trace(trace)
    try:
        return _solve(problem, tol, max_iter, stream)
    finally:
        if owned:
            stream.close()


def _initial_point(problem: SdpProblem):
    X, Z = [], []
    b = problem.b
    for Cj, Aj, n in zip(problem.C, problem.A, problem.block_dims):
        norms = np.sqrt(np.asarray(abs(Aj).power(2).sum(axis=1)).ravel())
        active = norms > 0
        ratio = np.max((1 + np.abs(b[active])) / (1 + norms[active])) if active.any() else 1.0
        xi = max(10.0, math.sqrt(n), math.sqrt(n) * ratio)
        eta = max(10.0, math.sqrt(n), float(norms.max(initial=0.0)), float(np.linalg.norm(Cj)))
        X.append(xi * np.eye(n, dtype=Cj.dtype))
        Z.append(eta * np.eye(n, dtype=Cj.dtype))
    return X, Z


def _solve(problem: SdpProblem, tol: float, max_iter: int, stream) -> SdpSolution:
    m = problem.m
    a = problem.free_A
    cu = problem.free_cost
    f = a.shape[1]
    b = problem.b
    C = problem.C
    dims = problem.block_dims
    N = float(sum(dims))
    schur = [_SchurBlock(Aj, n) for Aj, n in zip(problem.A, dims)]

    X, Z = _initial_point(problem)
    y = np.zeros(m)
    u = np.zeros(f)
    normb = 1.0 + float(np.linalg.norm(b))
    normc = 1.0 + math.sqrt(_fro(C) ** 2 + float(cu @ cu))
    history: list[dict] = []
    status = Status.NUMERICAL_LIMIT
    message = f"iteration limit {max_iter} reached"
    pinf = dinf = gap = math.inf
    pobj = dobj = math.nan
    it = 0

    for it in range(max_iter + 1):
        AtY = problem.apply_At(y)
        Rp = b - problem.apply_A(X) - a @ u
        Rd = [Cj - Aty - Zj for Cj, Aty, Zj in zip(C, AtY, Z)]
        ru = cu - a.T @ y
        pobj = problem.objective(X, u)
        dobj = float(b @ y)
        mu = _inner(X, Z) / N
        pinf = float(np.linalg.norm(Rp)) / normb
        dinf = math.sqrt(_fro(Rd) ** 2 + float(ru @ ru)) / normc
        gap = abs(pobj - dobj) / (1.0 + abs(pobj))
        rec = {"iteration": it, "gap": gap, "pres": pinf, "dres": dinf, "mu": mu,
               "primal": pobj, "dual": dobj}
        history.append(rec)
        if stream is not None:
            stream.write(json.dumps(rec) + "\n")
        log.debug("it %3d  p %.9e  d %.9e  pinf %.2e  dinf %.2e  gap %.2e",
                  it, pobj, dobj, pinf, dinf, gap)

        if pinf <= tol and dinf <= tol and gap <= tol:
            status, message = Status.OPTIMAL, "converged"
            break
        # infeasibility certificates along diverging iterates
        if dobj > 0:
            ray = math.sqrt(_fro([t + z for t, z in zip(AtY, Z)]) ** 2 + float((a.T @ y) @ (a.T @ y)))
            if ray / dobj < INFEASIBILITY_TOL:
                status, message = Status.PRIMAL_INFEASIBLE, "dual improving ray found"
                break
        if pobj < 0:
            axu = float(np.linalg.norm(problem.apply_A(X) + a @ u))
            if axu / -pobj < INFEASIBILITY_TOL:
                status, message = Status.DUAL_INFEASIBLE, "primal improving ray found"
                break
        if it == max_iter:
            break

        try:
            LX = [np.linalg.cholesky(Xj) for Xj in X]
            LZ = [np.linalg.cholesky(Zj) for Zj in Z]
        except np.linalg.LinAlgError:
            message = "iterate left the cone"
            break
        Zinv = [_sym(sla.cho_solve((L, True), np.eye(L.shape[0], dtype=L.dtype))) for L in LZ]

        M = np.zeros((m, m))
        for sb, Xj, Zi in zip(schur, X, Zinv):
            sb.add_to(M, Xj, Zi)
        M = 0.5 * (M + M.T)
        try:
            factor = _factor(M)
        except np.linalg.LinAlgError:
            message = "Schur complement is singular"
            break

        XRdZ = [Xj @ R @ Zi for Xj, R, Zi in zip(X, Rd, Zinv)]

        def direction(G):
            H = [g - xr for g, xr in zip(G, XRdZ)]
            h = Rp - problem.apply_A(H)
            dy, du = _saddle(factor, a, h, ru)
            dZ = [R - t for R, t in zip(Rd, problem.apply_At(dy))]
            dX = [_sym(g - Xj @ dz @ Zi) for g, Xj, dz, Zi in zip(G, X, dZ, Zinv)]
            return dX, dy, du, dZ

        dXa, dya, dua, dZa = direction([-Xj for Xj in X])
        ap = min(1.0, min(_max_step(L, d) for L, d in zip(LX, dXa)))
        ad = min(1.0, min(_max_step(L, d) for L, d in zip(LZ, dZa)))
        mu_aff = _inner([x + ap * d for x, d in zip(X, dXa)],
                        [z + ad * d for z, d in zip(Z, dZa)]) / N
        expon = max(1.0, 3.0 * min(ap, ad) ** 2)
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** expon if mu > 0 else 0.0

        G = [sigma * mu * Zi - Xj - dx @ dz @ Zi
             for Zi, Xj, dx, dz in zip(Zinv, X, dXa, dZa)]
        dX, dy, du, dZ = direction(G)
        ap = min(1.0, STEP_FRACTION * min(_max_step(L, d) for L, d in zip(LX, dX)))
        ad = min(1.0, STEP_FRACTION * min(_max_step(L, d) for L, d in zip(LZ, dZ)))
        if ap < 1e-12 and ad < 1e-12:
            message = "step length collapsed"
            break
        X = [_sym(x + ap * d) for x, d in zip(X, dX)]
        u = u + ap * du
        y = y + ad * dy
        Z = [_sym(z + ad * d) for z, d in zip(Z, dZ)]

    return SdpSolution(status, X, u, y, Z, pobj, dobj, it, pinf, dinf, gap, message, history)


def _factor(M: np.ndarray):
    scale = max(float(np.max(np.abs(np.diag(M)))), 1e-300)
    for reg in (0.0, 1e-14, 1e-12, 1e-10):
        try:
            return ("chol", sla.cho_factor(M + reg * scale * np.eye(M.shape[0]), lower=True))
        except np.linalg.LinAlgError:
            continue
    lam, V = np.linalg.eigh(M)
    if lam[-1] <= 0:
        raise np.linalg.LinAlgError("Schur complement is not positive")
    keep = lam > 1e-14 * lam[-1]
    return ("eig", (V[:, keep], lam[keep]))


def _msolve(factor, r: np.ndarray) -> np.ndarray:
    kind, data = factor
    if kind == "chol":
        return sla.cho_solve(data, r)
    V, lam = data
    return V @ ((V.T @ r) / lam[:, None] if r.ndim == 2 else (V.T @ r) / lam)


def _saddle(factor, a: np.ndarray, h: np.ndarray, ru: np.ndarray):
    """Solve ``[[M, a], [a^T, 0]] [dy; du] = [h; ru]``."""
    if a.shape[1] == 0:
        return _msolve(factor, h), np.zeros(0)
    Minv_h = _msolve(factor, h)
    Minv_a = _msolve(factor, a)
    S = a.T @ Minv_a
    du = np.linalg.solve(S, a.T @ Minv_h - ru)
    dy = Minv_h - Minv_a @ du
    return dy, du


# ----------------------------------------------------------------------------
# certificates


def verify_certificate(problem: SdpProblem, solution: SdpSolution) -> CertificateReport:
    """Recompute residuals of a solution from scratch."""
    X, Z, y, u = solution.X, solution.Z, solution.y, solution.u
    rp = problem.b - problem.apply_A(X) - problem.free_A @ u
    At = problem.apply_At(y)
    rd = [Cj - t - Zj for Cj, t, Zj in zip(problem.C, At, Z)]
    ru = problem.free_cost - problem.free_A.T @ y
    pobj = problem.objective(X, u)
    dobj = float(problem.b @ y)
    normb = 1.0 + float(np.linalg.norm(problem.b))
    normc = 1.0 + math.sqrt(_fro(problem.C) ** 2 + float(problem.free_cost @ problem.free_cost))
    return CertificateReport(
        primal_residual=float(np.linalg.norm(rp)) / normb,
        dual_residual=math.sqrt(_fro(rd) ** 2 + float(ru @ ru)) / normc,
        gap=abs(pobj - dobj) / (1.0 + abs(pobj)),
        min_eig_X=min(float(np.linalg.eigvalsh(x)[0]) for x in X),
        min_eig_Z=min(float(np.linalg.eigvalsh(z)[0]) for z in Z),
        complementarity=_inner(X, Z),
    )


# ----------------------------------------------------------------------------
# real embedding


def embed_matrix(A: np.ndarray) -> np.ndarray:
    """``[[Re A, -Im A], [Im A, Re A]]``."""
    A = np.asarray(A, dtype=complex)
    return np.block([[A.real, -A.imag], [A.imag, A.real]])


def unembed_matrix(E: np.ndarray, halve: bool) -> np.ndarray:
    n = E.shape[0] // 2
    re = E[:n, :n] + E[n:, n:]
    im = E[n:, :n] - E[:n, n:]
    out = re + 1j * im
    return out / 2 if halve else out


def _embed_rows(Aj: sparse.csr_matrix, n: int) -> sparse.csr_matrix:
    coo = Aj.tocoo()
    r, c, v = coo.row, coo.col, coo.data
    p, q = c // n, c % n
    N = 2 * n
    rows, cols, vals = [], [], []
    parts = [
        (p, q, v.real),
        (p + n, q + n, v.real),
        (p, q + n, -v.imag),
        (p + n, q, v.imag),
    ]
    for pp, qq, vv in parts:
        keep = vv != 0
        rows.append(r[keep])
        cols.append(pp[keep] * N + qq[keep])
        vals.append(vv[keep])
    return sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(Aj.shape[0], N * N),
    )


def embed_real(problem: SdpProblem) -> tuple[SdpProblem, list[bool]]:
    """Equivalent problem with every complex block replaced by its real embedding.

    The embedded primal variable is ``E(X) / 2`` and the embedded dual slack is
    ``E(Z)``, so objective values and multipliers ``y`` are unchanged.
    """
    C, A, mask = [], [], []
    for Cj, Aj, n in zip(problem.C, problem.A, problem.block_dims):
        if np.iscomplexobj(Cj):
            C.append(embed_matrix(Cj))
            A.append(_embed_rows(Aj, n))
            mask.append(True)
        else:
            C.append(Cj)
            A.append(Aj)
            mask.append(False)
    return SdpProblem(C, A, problem.b, problem.free_cost, problem.free_A), mask


def _unembed_solution(sol: SdpSolution, mask: list[bool]) -> SdpSolution:
    X = [unembed_matrix(x, halve=False) if cx else x for x, cx in zip(sol.X, mask)]
    Z = [unembed_matrix(z, halve=True) if cx else z for z, cx in zip(sol.Z, mask)]
    return SdpSolution(sol.status, X, sol.u, sol.y, Z, sol.primal_objective,
                       sol.dual_objective, sol.iterations, sol.primal_infeasibility,
                       sol.dual_infeasibility, sol.gap, sol.message, sol.history)
