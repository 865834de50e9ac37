"""JSON file formats for operators, vectors and witnesses.

A matrix file is ``{"dims": [d1, ..., dk], "re": [[...]], "im": [[...]]}`` with
row-major nested lists.  Vector files use the same keys with flat lists.
Witness files may add ``"cuts": ["0|12", ...]`` naming the cuts the operator
belongs to.  Floats are written with ``repr`` precision so files round-trip
exactly.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .hermitian import Bipartition, DimensionError, HermitianOperator, SubsystemShape


class FormatError(ValueError):
    """Malformed input file."""


@dataclass
class OperatorFile:
    data: np.ndarray
    shape: SubsystemShape
    cuts: list[Bipartition] = field(default_factory=list)
    meta: dict[str, Any] = field(default_factory=dict)


def _load_json(path: str | os.PathLike) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(obj, dict):
        raise FormatError(f"{path}: expected a JSON object")
    for key in ("dims", "re"):
        if key not in obj:
            raise FormatError(f"{path}: missing key {key!r}")
    return obj


def _complex_array(obj: dict, path) -> np.ndarray:
    try:
        re = np.array(obj["re"], dtype=float)
        im = np.array(obj.get("im", np.zeros_like(re)), dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: entries must be numbers ({exc})") from None
    if re.shape != im.shape:
        raise FormatError(f"{path}: 're' has shape {re.shape} but 'im' has shape {im.shape}")
    return re + 1j * im


def _shape(obj: dict, path) -> SubsystemShape:
    dims = obj["dims"]
    if not isinstance(dims, list) or not all(isinstance(d, int) for d in dims):
        raise FormatError(f"{path}: 'dims' must be a list of integers")
    return SubsystemShape(tuple(dims))


def read_operator(path: str | os.PathLike) -> OperatorFile:
    """Read and validate a Hermitian operator file."""
    obj = _load_json(path)
    shape = _shape(obj, path)
    A = _complex_array(obj, path)
    if A.ndim != 2:
        raise FormatError(f"{path}: expected a matrix, got an array of shape {A.shape}")
    op = HermitianOperator(shape, A)
    cuts = [Bipartition.parse(c, shape) for c in obj.get("cuts", [])]
    meta = {k: v for k, v in obj.items() if k not in ("dims", "re", "im", "cuts")}
    return OperatorFile(np.array(op.data), shape, cuts, meta)


def read_vector(path: str | os.PathLike) -> tuple[np.ndarray, SubsystemShape]:
    """Read a vector file, or a rank-one operator file (its range is returned)."""
    obj = _load_json(path)
    shape = _shape(obj, path)
    v = _complex_array(obj, path)
    if v.ndim == 2:
        op = HermitianOperator(shape, v)
        lam, V = np.linalg.eigh(op.data)
        if np.any(np.abs(lam[:-1]) > 1e-9 * max(1.0, abs(lam[-1]))):
            raise FormatError(f"{path}: operator is not rank one, cannot extract a vector")
        v = V[:, -1] * np.sqrt(lam[-1])
    if v.ndim != 1 or v.shape[0] != shape.total:
        raise DimensionError(f"{path}: vector of shape {v.shape} does not fit dims {shape.dims}")
    return v, shape


def _payload(A: np.ndarray, dims: Sequence[int]) -> dict:
    A = np.asarray(A, dtype=complex)
    return {"dims": [int(d) for d in dims], "re": A.real.tolist(), "im": A.imag.tolist()}


def write_operator(path: str | os.PathLike, A: np.ndarray, dims: Sequence[int],
                   cuts: Sequence[Bipartition] = (), **meta) -> None:
    obj = _payload(A, dims)
    if cuts:
        obj["cuts"] = [c.label for c in cuts]
    obj.update(meta)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)
        fh.write("\n")


def write_vector(path: str | os.PathLike, v: np.ndarray, dims: Sequence[int]) -> None:
    write_operator(path, np.asarray(v).ravel(), dims)
