"""Positive but not completely positive maps and their action on subsystems.

Two families are catalogued:

* the transpose, valid in any local dimension;
* the generalized Choi maps on 3x3 matrices,

      Phi[c1, c2, c3](X) = diag(W x) - X + diag(x),    x = diag(X),

  where ``W`` is the circulant matrix with first row ``(c1, c2, c3)`` and
  rows ``(c3, c1, c2)`` and ``(c2, c3, c1)``.  The off-diagonal entries of
  ``X`` are negated and the diagonal is replaced by the weighted populations.
  ``Phi[1, 1, 0]`` is the classical Choi map.  The map is positive exactly when
  ``c1 + c2 + c3 >= 2`` and, for ``c1 <= 1``, ``c2 * c3 >= (1 - c1)**2``.

The adjoint of ``Phi[c1, c2, c3]`` with respect to the Hilbert-Schmidt inner
product is ``Phi[c1, c3, c2]``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .hermitian import Bipartition, DimensionError, group_parties, partial_transpose, ungroup_parties

TRANSPOSE = "transpose"
GCHOI = "gchoi"


@dataclass(frozen=True)
class PositiveMapSpec:
    """A catalogued positive map, optionally replaced by its adjoint."""

    kind: str
    params: tuple[float, ...] = ()
    dualized: bool = False

    def __post_init__(self) -> None:
        if self.kind == TRANSPOSE:
            if self.params:
                raise ValueError("the transpose takes no parameters")
        elif self.kind == GCHOI:
            if len(self.params) != 3:
                raise ValueError("generalized Choi maps take three parameters")
            c1, c2, c3 = (float(c) for c in self.params)
            object.__setattr__(self, "params", (c1, c2, c3))
            if min(c1, c2, c3) < 0 or not np.all(np.isfinite(self.params)):
                raise ValueError(f"parameters must be nonnegative, got {self.params}")
            if c1 + c2 + c3 < 2:
                raise ValueError(f"map is not positive: c1+c2+c3 = {c1 + c2 + c3} < 2")
            if c1 <= 1 and c2 * c3 < (1 - c1) ** 2:
                raise ValueError(
                    f"map is not positive: c2*c3 = {c2 * c3} < (1-c1)^2 = {(1 - c1) ** 2}"
                )
        else:
            raise ValueError(f"unknown map kind {self.kind!r}")

    @property
    def local_dim(self) -> int | None:
        """Required local dimension, or None when any dimension works."""
        return 3 if self.kind == GCHOI else None

    def canonical(self) -> "PositiveMapSpec":
        """Equivalent spec with the dual flag folded into the parameters."""
        if self.kind == TRANSPOSE:
            return PositiveMapSpec(TRANSPOSE)
        c1, c2, c3 = self.params
        if self.dualized:
            return PositiveMapSpec(GCHOI, (c1, c3, c2))
        return PositiveMapSpec(GCHOI, (c1, c2, c3))

    def __str__(self) -> str:
        if self.kind == TRANSPOSE:
            base = "ppt"
        elif self.params == (1.0, 1.0, 0.0):
            base = "choi"
        else:
            base = "gchoi:" + ",".join(repr(c) for c in self.params)
        return base + ("*" if self.dualized else "")


def transpose_map() -> PositiveMapSpec:
    return PositiveMapSpec(TRANSPOSE)


def generalized_choi(c1: float, c2: float, c3: float, dualized: bool = False) -> PositiveMapSpec:
    return PositiveMapSpec(GCHOI, (c1, c2, c3), dualized)


def choi_map() -> PositiveMapSpec:
    return generalized_choi(1.0, 1.0, 0.0)


_SPEC_RE = re.compile(r"^\s*(ppt|choi|gchoi:([^*]+))\s*(\*?)\s*$")


def parse_map(text: str) -> PositiveMapSpec:
    """Parse ``"ppt"``, ``"choi"`` or ``"gchoi:c1,c2,c3"``, each optionally
    followed by ``*`` for the adjoint map."""
    m = _SPEC_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse map spec {text!r}")
    dual = m.group(3) == "*"
    if m.group(1) == "ppt":
        return PositiveMapSpec(TRANSPOSE, (), dual)
    if m.group(1) == "choi":
        return generalized_choi(1.0, 1.0, 0.0, dual)
    values = [float(v) for v in m.group(2).split(",")]
    if len(values) != 3:
        raise ValueError(f"gchoi needs three parameters, got {m.group(2)!r}")
    return generalized_choi(*values, dualized=dual)


def dual_map(map_: PositiveMapSpec) -> PositiveMapSpec:
    return PositiveMapSpec(map_.kind, map_.params, not map_.dualized)


def _weights(map_: PositiveMapSpec) -> np.ndarray:
    c1, c2, c3 = map_.canonical().params
    return np.array([[c1, c2, c3], [c3, c1, c2], [c2, c3, c1]])


def apply_map(map_: PositiveMapSpec, X: np.ndarray) -> np.ndarray:
    """Apply the map to the last two axes of ``X``."""
    X = np.asarray(X)
    d = X.shape[-1]
    if X.ndim < 2 or X.shape[-2] != d:
        raise DimensionError(f"expected square matrices, got {X.shape}")
    if map_.kind == TRANSPOSE:
        return np.swapaxes(X, -1, -2).copy()
    if d != 3:
        raise DimensionError(f"generalized Choi maps act on 3x3 matrices, got {d}x{d}")
    x = np.diagonal(X, axis1=-2, axis2=-1)
    out = -np.array(X, dtype=np.result_type(X.dtype, float))
    idx = np.arange(3)
    out[..., idx, idx] = x @ _weights(map_).T
    return out


def map_side(map_: PositiveMapSpec, cut: Bipartition) -> list[int]:
    """Parties the map acts on for a cut.

    The transpose acts on the stored block.  A generalized Choi map acts on the
    side of local dimension 3, preferring the stored block when both qualify.
    """
    block = sorted(cut.block)
    if map_.kind == TRANSPOSE:
        return block
    for side in (block, sorted(cut.complement)):
        if cut.side_dim(side) == 3:
            return side
    raise DimensionError(f"cut {cut.label} has no side of dimension 3 for {map_}")


def apply_on_subsystem(map_: PositiveMapSpec, cut: Bipartition, X: np.ndarray,
                       side: list[int] | None = None) -> np.ndarray:
    """``(Lambda (x) id)[X]`` with ``Lambda`` acting on one side of the cut."""
    if side is None:
        side = map_side(map_, cut)
    side = sorted(side)
    if side not in (sorted(cut.block), sorted(cut.complement)):
        raise DimensionError(f"{side} is not a side of cut {cut.label}")
    dims = cut.shape.dims
    if map_.kind == TRANSPOSE:
        return partial_transpose(X, side, dims)
    if cut.side_dim(side) != 3:
        raise DimensionError(f"side {side} of cut {cut.label} has dimension {cut.side_dim(side)}, not 3")
    T = group_parties(np.asarray(X), dims, side)  # (..., a, r, b, s)
    lead = T.ndim - 4
    T = np.moveaxis(T, [lead + 1, lead + 3], [lead, lead + 1])  # (..., r, s, a, b)
    T = apply_map(map_, T)
    T = np.moveaxis(T, [lead, lead + 1], [lead + 1, lead + 3])
    return ungroup_parties(T, dims, side)


def choi_matrix(map_: PositiveMapSpec, d: int) -> np.ndarray:
    """``sum_ij Lambda(|i><j|) (x) |i><j|``."""
    if map_.local_dim is not None and d != map_.local_dim:
        raise DimensionError(f"{map_} needs local dimension {map_.local_dim}, got {d}")
    units = np.zeros((d, d, d, d))
    for i in range(d):
        for j in range(d):
            units[i, j, i, j] = 1.0
    images = apply_map(map_, units)  # images[i, j] = Lambda(|i><j|)
    return np.einsum("ijab->aibj", images).reshape(d * d, d * d)
