"""Dense Hermitian linear algebra on multipartite tensor-product spaces.

Operators on ``C^{d_0} (x) ... (x) C^{d_{k-1}}`` are stored as plain ``(n, n)``
complex numpy arrays with party 0 as the most significant tensor factor (the
ordering produced by ``np.kron``).  Most functions also accept stacks of
operators with shape ``(..., n, n)`` so that linear maps can be applied to a
whole basis at once.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

HERMITIAN_RTOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-9


class DimensionError(ValueError):
    """Raised when an operator does not fit the declared tensor structure."""


class HermiticityError(ValueError):
    """Raised when a matrix is not Hermitian within tolerance."""


@dataclass(frozen=True)
class SubsystemShape:
    """Local dimensions of a multipartite system."""

    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        if len(dims) < 1:
            raise DimensionError("a system needs at least one party")
        if any(d < 2 for d in dims):
            raise DimensionError(f"local dimensions must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def parties(self) -> int:
        return len(self.dims)

    @property
    def total(self) -> int:
        return int(np.prod(self.dims))

    def __iter__(self):
        return iter(self.dims)


def as_shape(shape: SubsystemShape | Sequence[int]) -> SubsystemShape:
    if isinstance(shape, SubsystemShape):
        return shape
    return SubsystemShape(tuple(shape))


@dataclass(frozen=True)
class Bipartition:
    """A split of the parties into ``block`` and its complement.

    The stored block always contains party 0, so each cut has exactly one
    representation.
    """

    shape: SubsystemShape
    block: frozenset[int]

    def __post_init__(self) -> None:
        shape = as_shape(self.shape)
        block = frozenset(int(i) for i in self.block)
        k = shape.parties
        if not block or len(block) >= k or not block <= set(range(k)):
            raise DimensionError(
                f"block {sorted(block)} is not a nonempty proper subset of {k} parties"
            )
        if 0 not in block:
            block = frozenset(range(k)) - block
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "block", block)

    @property
    def complement(self) -> frozenset[int]:
        return frozenset(range(self.shape.parties)) - self.block

    def side_dim(self, side: Iterable[int]) -> int:
        return int(np.prod([self.shape.dims[i] for i in side]))

    @property
    def label(self) -> str:
        return f"{_side_label(self.block)}|{_side_label(self.complement)}"

    @classmethod
    def parse(cls, text: str, shape: SubsystemShape | Sequence[int]) -> "Bipartition":
        """Parse ``"0|12"`` or ``"0,1|2"`` style labels."""
        shape = as_shape(shape)
        parts = text.strip().split("|")
        if len(parts) != 2:
            raise ValueError(f"cannot parse cut {text!r}")
        left, right = (_parse_side(p) for p in parts)
        if left & right or (left | right) != set(range(shape.parties)):
            raise DimensionError(f"cut {text!r} does not partition {shape.parties} parties")
        return cls(shape, frozenset(left))

    def __str__(self) -> str:
        return self.label


def _side_label(side: Iterable[int]) -> str:
    items = sorted(side)
    sep = "," if max(items) >= 10 else ""
    return sep.join(str(i) for i in items)


def _parse_side(text: str) -> set[int]:
    text = text.strip()
    if not text:
        raise ValueError("empty side in cut label")
    if "," in text:
        return {int(t) for t in text.split(",")}
    return {int(ch) for ch in text}


def enumerate_bipartitions(shape: SubsystemShape | Sequence[int]) -> list[Bipartition]:
    """All ``2**(k-1) - 1`` bipartitions of a k-party system, in a fixed order.

    Blocks are listed by size and then lexicographically, each containing party 0.
    """
    shape = as_shape(shape)
    k = shape.parties
    if k < 2:
        raise DimensionError("no bipartition exists for a single party")
    return [
        Bipartition(shape, frozenset((0,) + rest))
        for size in range(1, k)
        for rest in itertools.combinations(range(1, k), size - 1)
    ]


# --------------------------------------------------------------------------
# validation helpers


def check_hermitian(A: np.ndarray, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Return ``A`` as a complex array after checking Hermiticity.

    Inputs are rejected rather than symmetrized.
    """
    A = np.asarray(A)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise DimensionError(f"expected square matrices, got shape {A.shape}")
    dev = np.max(np.abs(A - np.conj(np.swapaxes(A, -1, -2)))) if A.size else 0.0
    scale = np.max(np.linalg.norm(A, ord=2, axis=(-2, -1))) if A.size else 0.0
    if dev > rtol * max(scale, 1e-300) and dev > 0:
        raise HermiticityError(
            f"matrix is not Hermitian: max deviation {dev:.3e} vs norm {scale:.3e}"
        )
    return A


def hermitize(A: np.ndarray) -> np.ndarray:
    """Symmetric part ``(A + A^H) / 2``; used on computed, not ingested, data."""
    return 0.5 * (A + np.conj(np.swapaxes(A, -1, -2)))


def _check_fits(A: np.ndarray, shape: SubsystemShape) -> None:
    n = shape.total
    if A.shape[-2:] != (n, n):
        raise DimensionError(
            f"operator of shape {A.shape[-2:]} does not fit dims {shape.dims} (n={n})"
        )


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """A Hermitian matrix together with its tensor-product structure."""

    shape: SubsystemShape
    data: np.ndarray

    def __post_init__(self) -> None:
        shape = as_shape(self.shape)
        data = np.array(self.data, dtype=complex)
        if data.ndim != 2:
            raise DimensionError("HermitianOperator holds a single matrix")
        _check_fits(data, shape)
        check_hermitian(data)
        data.setflags(write=False)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "data", data)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.shape.dims

    @property
    def n(self) -> int:
        return self.shape.total


@dataclass(frozen=True, eq=False)
class DensityMatrix(HermitianOperator):
    """Unit-trace positive semidefinite operator."""

    def __post_init__(self) -> None:
        super().__post_init__()
        tr = np.trace(self.data).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix has trace {tr!r}")
        lam = np.linalg.eigvalsh(self.data)[0]
        if lam < -PSD_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {lam:.3e}")


# --------------------------------------------------------------------------
# reshuffles


def _tensor_view(A: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    k = len(dims)
    lead = A.shape[:-2]
    return A.reshape(lead + tuple(dims) + tuple(dims)), len(lead), k


def partial_transpose(A: np.ndarray, cut: Bipartition | Sequence[int],
                      dims: Sequence[int] | None = None) -> np.ndarray:
    """Transpose the tensor factors listed in ``cut`` (a Bipartition or party list).

    Works on stacks ``(..., n, n)``.
    """
    parties, dims = _resolve(cut, dims)
    A = np.asarray(A)
    _check_fits(A, SubsystemShape(tuple(dims)))
    T, nlead, k = _tensor_view(A, dims)
    axes = list(range(T.ndim))
    for p in parties:
        i, j = nlead + p, nlead + k + p
        axes[i], axes[j] = axes[j], axes[i]
    return T.transpose(axes).reshape(A.shape)


def _resolve(cut, dims):
    if isinstance(cut, Bipartition):
        return sorted(cut.block), cut.shape.dims
    if dims is None:
        raise DimensionError("dims are required when the cut is given as a party list")
    return sorted(int(p) for p in cut), tuple(int(d) for d in dims)


def group_parties(A: np.ndarray, dims: Sequence[int], side: Sequence[int]) -> np.ndarray:
    """Reorder factors so ``side`` comes first; returns shape ``(..., ds, dr, ds, dr)``."""
    dims = tuple(dims)
    k = len(dims)
    side = sorted(side)
    rest = [p for p in range(k) if p not in side]
    T, nlead, _ = _tensor_view(np.asarray(A), dims)
    order = side + rest
    lead = list(range(nlead))
    axes = lead + [nlead + p for p in order] + [nlead + k + p for p in order]
    ds = int(np.prod([dims[p] for p in side]))
    dr = int(np.prod([dims[p] for p in rest])) if rest else 1
    return T.transpose(axes).reshape(A.shape[:-2] + (ds, dr, ds, dr))


def ungroup_parties(T: np.ndarray, dims: Sequence[int], side: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`group_parties`; returns ``(..., n, n)``."""
    dims = tuple(dims)
    k = len(dims)
    side = sorted(side)
    rest = [p for p in range(k) if p not in side]
    order = side + rest
    nlead = T.ndim - 4
    lead_shape = T.shape[:nlead]
    full = T.reshape(lead_shape + tuple(dims[p] for p in order) * 2)
    inv = np.argsort(order)
    axes = list(range(nlead)) + [nlead + int(i) for i in inv] + [nlead + k + int(i) for i in inv]
    n = int(np.prod(dims))
    return full.transpose(axes).reshape(lead_shape + (n, n))


def kron_across(cut: Bipartition, A_block: np.ndarray, B_rest: np.ndarray) -> np.ndarray:
    """``A_block (x) B_rest`` placed back into the natural party order."""
    T = np.einsum("ac,bd->abcd", A_block, B_rest)
    return ungroup_parties(T, cut.shape.dims, sorted(cut.block))


def realign(A: np.ndarray, cut: Bipartition) -> np.ndarray:
    """Realignment matrix ``R[(i,j),(k,l)] = A[(i,k),(j,l)]`` across ``cut``.

    Shape ``(d_b**2, d_rest**2)``; its singular values are the operator Schmidt
    coefficients of ``A`` with respect to the cut.
    """
    A = np.asarray(A)
    T = group_parties(A, cut.shape.dims, sorted(cut.block))
    ds, dr = T.shape[0], T.shape[1]
    return T.transpose(0, 2, 1, 3).reshape(ds * ds, dr * dr)


def partial_trace(A: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduced operator on the parties in ``keep``."""
    T = group_parties(np.asarray(A), dims, keep)
    return np.einsum("...ajbj->...ab", T)


# --------------------------------------------------------------------------
# spectral operations


def eig_hermitian(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors (columns)."""
    A = check_hermitian(A)
    return np.linalg.eigh(A)


def positive_part(A: np.ndarray) -> np.ndarray:
    """Projection of a Hermitian matrix onto the PSD cone."""
    lam, V = eig_hermitian(A)
    return hermitize((V * np.clip(lam, 0.0, None)) @ V.conj().T)


def lambda_min(A: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(A)[0])


def lambda_max(A: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(A)[-1])


class Norms(NamedTuple):
    trace_norm: float
    hs_norm: float
    op_norm: float
    hs_inner: float | None


def norms_and_inner(A: np.ndarray, B: np.ndarray | None = None) -> Norms:
    """Trace, Hilbert-Schmidt and operator norms of ``A`` and ``Tr(AB)``."""
    A = check_hermitian(A)
    lam = np.abs(np.linalg.eigvalsh(A))
    inner = None
    if B is not None:
        B = check_hermitian(B)
        if B.shape != A.shape:
            raise DimensionError(f"shape mismatch {A.shape} vs {B.shape}")
        inner = hs_inner(A, B)
    return Norms(float(lam.sum()), float(np.sqrt(np.sum(lam**2))), float(lam.max()), inner)


def hs_inner(A: np.ndarray, B: np.ndarray) -> float:
    """Real part of ``Tr(A^H B)``; equals ``Tr(AB)`` for Hermitian pairs."""
    return float(np.vdot(A, B).real)


def expectation(A: np.ndarray, psi: np.ndarray) -> float:
    return float(np.vdot(psi, A @ psi).real)


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())
