"""A small modelling layer that turns linear matrix inequalities into SdpProblems.

Decision variables are real scalars and Hermitian matrices.  A Hermitian
variable of size ``n`` is expanded in the Hilbert-Schmidt orthonormal basis

    E_kk,   (E_kl + E_lk) / sqrt(2),   i (E_kl - E_lk) / sqrt(2),   k < l,

so its coordinates are real.  Constraints have the form ``F0 + sum_t L_t(v_t)
>= 0`` where each ``L_t`` is a linear map applied to a variable.  The collected
coordinates become the dual vector ``y`` of :mod:`gmerelax.solver`; each LMI is
one PSD block and linear equalities become free primal variables.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import sparse

from . import solver as _solver
from .solver import SdpProblem, SdpSolution, Status


@lru_cache(maxsize=16)
def _basis_cached(n: int, real: bool) -> np.ndarray:
    mats = []
    r = 1.0 / np.sqrt(2.0)
    for k in range(n):
        E = np.zeros((n, n), dtype=complex)
        E[k, k] = 1.0
        mats.append(E)
    for k in range(n):
        for l in range(k + 1, n):
            E = np.zeros((n, n), dtype=complex)
            E[k, l] = E[l, k] = r
            mats.append(E)
            if not real:
                E = np.zeros((n, n), dtype=complex)
                E[k, l] = 1j * r
                E[l, k] = -1j * r
                mats.append(E)
    out = np.array(mats)
    out.setflags(write=False)
    return out


def hermitian_basis(n: int, real: bool = False) -> np.ndarray:
    """Orthonormal basis of Hermitian (or real symmetric) ``n x n`` matrices."""
    return _basis_cached(int(n), bool(real))


def coordinates(H: np.ndarray, real: bool = False) -> np.ndarray:
    """Real coordinates of ``H`` in :func:`hermitian_basis`."""
    B = hermitian_basis(H.shape[0], real)
    return np.einsum("pij,ij->p", B.conj(), H).real


@dataclass(frozen=True)
class Variable:
    offset: int
    size: int
    n: int | None = None  # matrix size for Hermitian variables
    real: bool = False
    name: str = ""

    @property
    def is_matrix(self) -> bool:
        return self.n is not None

    @property
    def slice(self) -> slice:
        return slice(self.offset, self.offset + self.size)


LinearOp = Callable[[np.ndarray], np.ndarray]


class LmiBuilder:
    """Collect variables, PSD constraints, equalities and a linear objective."""

    def __init__(self) -> None:
        self._nvar = 0
        self._vars: list[Variable] = []
        self._lmis: list[tuple[np.ndarray, list[tuple[Variable, np.ndarray]], str]] = []
        self._eqs: list[tuple[list[tuple[Variable, object]], float]] = []
        self._objective: list[tuple[Variable, object]] = []

    # variables ------------------------------------------------------------
    def scalar(self, name: str = "") -> Variable:
        v = Variable(self._nvar, 1, None, True, name)
        self._nvar += 1
        self._vars.append(v)
        return v

    def hermitian(self, n: int, name: str = "", real: bool = False) -> Variable:
        size = n * (n + 1) // 2 if real else n * n
        v = Variable(self._nvar, size, n, real, name)
        self._nvar += size
        self._vars.append(v)
        return v

    @property
    def num_variables(self) -> int:
        return self._nvar

    # constraints ----------------------------------------------------------
    def add_psd(self, const: np.ndarray, terms: Sequence[tuple[Variable, object]],
                name: str = "") -> int:
        """Require ``const + sum(terms) >= 0`` and return the block index.

        A term is ``(scalar_var, F)`` meaning ``s * F``, or ``(matrix_var, op)``
        meaning ``op(X)`` for a linear ``op`` acting on stacks of matrices
        (``None`` for the identity).
        """
        const = np.asarray(const)
        n = const.shape[0]
        coeffs = []
        for var, op in terms:
            if var.is_matrix:
                basis = hermitian_basis(var.n, var.real)
                stack = basis if op is None else np.asarray(op(basis))
            else:
                stack = np.asarray(op)[None]
            if stack.shape[1:] != (n, n):
                raise ValueError(
                    f"term for {var.name or var.offset} has shape {stack.shape[1:]}, expected {(n, n)}"
                )
            coeffs.append((var, stack))
        self._lmis.append((const, coeffs, name))
        return len(self._lmis) - 1

    def add_equality(self, terms: Sequence[tuple[Variable, object]], rhs: float) -> None:
        """``sum_t <coef_t, v_t> = rhs``; coefficients are floats for scalars and
        Hermitian matrices (pairing through ``Re Tr``) for matrix variables."""
        self._eqs.append((list(terms), float(rhs)))

    def maximize(self, terms: Sequence[tuple[Variable, object]]) -> None:
        self._objective = list(terms)

    # assembly -------------------------------------------------------------
    def _linear_vector(self, terms) -> np.ndarray:
        vec = np.zeros(self._nvar)
        for var, coef in terms:
            if var.is_matrix:
                B = hermitian_basis(var.n, var.real)
                vec[var.slice] += np.einsum("pij,ij->p", B.conj(), np.asarray(coef)).real
            else:
                vec[var.offset] += float(coef)
        return vec

    def build(self) -> SdpProblem:
        m = self._nvar
        if not self._lmis:
            raise ValueError("no PSD constraints were added")
        C, A = [], []
        for const, coeffs, _ in self._lmis:
            n = const.shape[0]
            rows, cols, vals = [], [], []
            for var, stack in coeffs:
                flat = stack.reshape(stack.shape[0], n * n)
                r, c = np.nonzero(flat)
                rows.append(r + var.offset)
                cols.append(c)
                vals.append(-flat[r, c])
            if rows:
                rows_a = np.concatenate(rows)
                cols_a = np.concatenate(cols)
                vals_a = np.concatenate(vals)
            else:
                rows_a = cols_a = np.zeros(0, dtype=int)
                vals_a = np.zeros(0)
            Aj = sparse.csr_matrix((vals_a, (rows_a, cols_a)), shape=(m, n * n))
            Aj.sum_duplicates()
            C.append(const)
            A.append(Aj)
        b = self._linear_vector(self._objective)
        free_A = np.zeros((m, len(self._eqs)))
        free_cost = np.zeros(len(self._eqs))
        for j, (terms, rhs) in enumerate(self._eqs):
            free_A[:, j] = self._linear_vector(terms)
            free_cost[j] = rhs
        return SdpProblem(C, A, b, free_cost, free_A)

    def solve(self, tol: float = 1e-7, max_iter: int = 200, **kwargs) -> "LmiSolution":
        problem = self.build()
        sol = _solver.solve(problem, tol=tol, max_iter=max_iter, **kwargs)
        return LmiSolution(problem, sol)


@dataclass
class LmiSolution:
    problem: SdpProblem
    sdp: SdpSolution

    @property
    def status(self) -> Status:
        return self.sdp.status

    @property
    def objective(self) -> float:
        return self.sdp.dual_objective

    @property
    def unbounded(self) -> bool:
        """The maximisation has no finite optimum (its dual is infeasible)."""
        return self.sdp.status is Status.PRIMAL_INFEASIBLE

    @property
    def infeasible(self) -> bool:
        return self.sdp.status is Status.DUAL_INFEASIBLE

    def value(self, var: Variable):
        y = self.sdp.y[var.slice]
        if not var.is_matrix:
            return float(y[0])
        B = hermitian_basis(var.n, var.real)
        return np.tensordot(y, B, axes=1)

    def slack(self, block: int) -> np.ndarray:
        """The value of the LMI expression of ``block`` at the solution."""
        return self.sdp.Z[block]

    def multiplier(self, block: int) -> np.ndarray:
        """The PSD dual certificate paired with ``block``."""
        return self.sdp.X[block]
