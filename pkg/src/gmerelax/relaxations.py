"""Semidefinite relaxations of the biseparable set.

A state is in the relaxed set ``R`` for a configuration ``{cut: maps}`` when it
can be written as ``rho = sum_b sigma_b`` with every ``sigma_b`` positive and
``(Lambda (x) id)[sigma_b]`` positive for every map attached to cut ``b``.
Every biseparable state lies in ``R`` for any choice of positive maps, so a
state outside ``R`` is genuinely multipartite entangled.

* :func:`mixer` maximises the common lower eigenvalue bound ``s`` of all
  the constrained operators; ``s < 0`` certifies that ``rho`` is outside ``R``.
* :func:`membership_distance` computes the Hilbert-Schmidt distance from
  ``rho`` to the set of unit-trace elements of ``R``.
* :func:`ppt_support` and :func:`per_cut_ppt_support` evaluate support
  functions of the fully-PPT and single-cut PPT state sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .hermitian import (
    Bipartition,
    DimensionError,
    SubsystemShape,
    as_shape,
    enumerate_bipartitions,
    hermitize,
    partial_transpose,
)
from .lmi import LmiBuilder, coordinates
from .positive_maps import PositiveMapSpec, apply_on_subsystem, map_side, transpose_map
from .solver import SolverError, Status

DETECTION_TOL = 1e-6
MAX_DISTANCE_DIM = 32


@dataclass
class MixerConfig:
    """Positive maps attached to each cut (an empty list means positivity only)."""

    shape: SubsystemShape
    maps_per_cut: dict[Bipartition, list[PositiveMapSpec]]

    def __post_init__(self) -> None:
        self.shape = as_shape(self.shape)
        cuts = enumerate_bipartitions(self.shape)
        maps = {}
        for cut in cuts:
            given = list(self.maps_per_cut.get(cut, []))
            for m in given:
                map_side(m, cut)  # raises if the map does not fit the cut
            maps[cut] = given
        extra = set(self.maps_per_cut) - set(cuts)
        if extra:
            raise DimensionError(f"cuts {sorted(c.label for c in extra)} do not belong to {self.shape.dims}")
        if not any(maps.values()):
            raise ValueError("at least one cut needs a nonempty map set")
        self.maps_per_cut = maps

    @property
    def cuts(self) -> list[Bipartition]:
        return list(self.maps_per_cut)

    @classmethod
    def uniform(cls, shape, maps: Iterable[PositiveMapSpec], skip_incompatible: bool = True) -> "MixerConfig":
        """Attach the same maps to every cut they fit."""
        shape = as_shape(shape)
        table = {}
        for cut in enumerate_bipartitions(shape):
            chosen = []
            for m in maps:
                try:
                    map_side(m, cut)
                except DimensionError:
                    if not skip_incompatible:
                        raise
                    continue
                chosen.append(m)
            table[cut] = chosen
        return cls(shape, table)

    @classmethod
    def ppt(cls, shape) -> "MixerConfig":
        return cls.uniform(shape, [transpose_map()])

    def extended(self, cut: Bipartition, extra: Sequence[PositiveMapSpec]) -> "MixerConfig":
        table = {c: list(v) for c, v in self.maps_per_cut.items()}
        table[cut] = table[cut] + list(extra)
        return MixerConfig(self.shape, table)


@dataclass
class MixerResult:
    s_opt: float
    decomposition: list[tuple[Bipartition, np.ndarray]]
    status: Status
    gap: float
    iterations: int

    @property
    def detected_gme(self) -> bool:
        return self.s_opt < -DETECTION_TOL

    @property
    def verdict(self) -> str:
        if self.s_opt < -DETECTION_TOL:
            return "detected"
        if self.s_opt < 0:
            return "inconclusive (numerical)"
        return "not detected"


def _check_state(rho: np.ndarray, shape: SubsystemShape) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (shape.total, shape.total):
        raise DimensionError(f"state of shape {rho.shape} does not fit dims {shape.dims}")
    return rho


def _map_op(m: PositiveMapSpec, cut: Bipartition):
    side = map_side(m, cut)
    return lambda X: apply_on_subsystem(m, cut, X, side)


def _raise_unless_optimal(sol, what: str) -> None:
    if sol.status is not Status.OPTIMAL:
        raise SolverError(
            f"{what}: solver stopped with status {sol.status.value} after {sol.sdp.iterations} "
            f"iterations (pinf {sol.sdp.primal_infeasibility:.2e}, dinf "
            f"{sol.sdp.dual_infeasibility:.2e}, gap {sol.sdp.gap:.2e}): {sol.sdp.message}",
            sol.sdp,
        )


def mixer(rho: np.ndarray, config: MixerConfig, tol: float = 1e-7, max_iter: int = 200) -> MixerResult:
    """Maximise ``s`` such that ``rho = sum_b sigma_b`` with each ``sigma_b`` and
    each mapped ``(Lambda (x) id)[sigma_b]`` bounded below by ``s * 1``.

    The last cut's operator is eliminated as ``rho - sum`` of the others.
    """
    shape = config.shape
    rho = _check_state(rho, shape)
    n = shape.total
    eye = np.eye(n)
    cuts = config.cuts
    lb = LmiBuilder()
    s = lb.scalar("s")
    sig = [lb.hermitian(n, name=cut.label) for cut in cuts[:-1]]

    for cut, var in zip(cuts[:-1], sig):
        lb.add_psd(np.zeros((n, n)), [(var, None), (s, -eye)])
        for m in config.maps_per_cut[cut]:
            lb.add_psd(np.zeros((n, n)), [(var, _map_op(m, cut)), (s, -eye)])

    last = cuts[-1]
    minus = [(var, lambda B: -B) for var in sig]
    lb.add_psd(rho, minus + [(s, -eye)])
    for m in config.maps_per_cut[last]:
        op = _map_op(m, last)
        lb.add_psd(op(rho), [(var, lambda B, op=op: -op(B)) for var in sig] + [(s, -eye)])

    lb.maximize([(s, 1.0)])
    sol = lb.solve(tol=tol, max_iter=max_iter)
    _raise_unless_optimal(sol, "mixer")
    sigmas = [hermitize(sol.value(v)) for v in sig]
    decomposition = list(zip(cuts[:-1], sigmas))
    decomposition.append((last, hermitize(rho - sum(sigmas, np.zeros_like(rho)))))
    return MixerResult(sol.value(s), decomposition, sol.status, sol.sdp.gap, sol.sdp.iterations)


@dataclass
class DistanceResult:
    distance: float
    closest: np.ndarray
    components: list[tuple[Bipartition, np.ndarray]] = field(default_factory=list)
    status: Status = Status.OPTIMAL

    def member(self, tol: float = 1e-5) -> bool:
        return self.distance <= tol


def membership_distance(rho: np.ndarray, config: MixerConfig, tol: float = 1e-7,
                        max_iter: int = 200) -> DistanceResult:
    """Hilbert-Schmidt distance from ``rho`` to the unit-trace part of ``R``.

    Uses the arrow-shaped epigraph ``[[t, w^T], [w, t 1]] >= 0`` with ``w`` the
    real coordinates of ``sigma - rho``, which holds exactly when
    ``t >= ||sigma - rho||``.  Bounding the norm rather than its square keeps
    the distance accurate to the solver tolerance near zero.
    """
    shape = config.shape
    rho = _check_state(rho, shape)
    n = shape.total
    if n > MAX_DISTANCE_DIM:
        raise DimensionError(
            f"membership_distance supports total dimension up to {MAX_DISTANCE_DIM}; got {n} "
            f"(the epigraph block would have size {n * n + 1})"
        )
    cuts = config.cuts
    lb = LmiBuilder()
    t = lb.scalar("t")
    sig = [lb.hermitian(n, name=cut.label) for cut in cuts]
    for cut, var in zip(cuts, sig):
        lb.add_psd(np.zeros((n, n)), [(var, None)])
        for m in config.maps_per_cut[cut]:
            lb.add_psd(np.zeros((n, n)), [(var, _map_op(m, cut))])
    lb.add_equality([(var, np.eye(n)) for var in sig], 1.0)

    p = n * n
    const = np.zeros((p + 1, p + 1))
    r = coordinates(rho)
    const[0, 1:] = const[1:, 0] = -r

    def embed(B: np.ndarray) -> np.ndarray:
        # coordinates of each basis element are unit vectors
        out = np.zeros((B.shape[0], p + 1, p + 1))
        idx = np.arange(B.shape[0])
        out[idx, 0, idx + 1] = 1.0
        out[idx, idx + 1, 0] = 1.0
        return out

    lb.add_psd(const, [(t, np.eye(p + 1))] + [(var, embed) for var in sig])
    lb.maximize([(t, -1.0)])
    sol = lb.solve(tol=tol, max_iter=max_iter)
    _raise_unless_optimal(sol, "membership_distance")
    comps = [(cut, hermitize(sol.value(v))) for cut, v in zip(cuts, sig)]
    closest = hermitize(sum(c for _, c in comps))
    dist = float(np.linalg.norm(closest - rho))
    return DistanceResult(dist, closest, comps, sol.status)


def _ppt_program(G: np.ndarray, shape: SubsystemShape, cuts: Sequence[Bipartition],
                 tol: float, max_iter: int) -> float:
    G = np.asarray(G)
    n = shape.total
    if G.shape != (n, n):
        raise DimensionError(f"direction of shape {G.shape} does not fit dims {shape.dims}")
    if abs(np.trace(G)) > 1e-9 * max(1.0, float(np.linalg.norm(G))):
        raise ValueError("direction must be traceless")
    lb = LmiBuilder()
    rho = lb.hermitian(n, "rho")
    lb.add_psd(np.zeros((n, n)), [(rho, None)])
    for cut in cuts:
        lb.add_psd(np.zeros((n, n)), [(rho, lambda B, cut=cut: partial_transpose(B, cut))])
    lb.add_equality([(rho, np.eye(n))], 1.0)
    lb.maximize([(rho, G)])
    sol = lb.solve(tol=tol, max_iter=max_iter)
    _raise_unless_optimal(sol, "ppt_support")
    return sol.objective


def ppt_support(G: np.ndarray, shape, tol: float = 1e-7, max_iter: int = 200) -> float:
    """``max Tr(G rho)`` over states that are PPT across every cut."""
    shape = as_shape(shape)
    cuts = enumerate_bipartitions(shape) if shape.parties > 1 else []
    return _ppt_program(G, shape, cuts, tol, max_iter)


def per_cut_ppt_support(G: np.ndarray, cut: Bipartition, tol: float = 1e-7,
                        max_iter: int = 200) -> float:
    """``max Tr(G rho)`` over states that are PPT across the single ``cut``."""
    return _ppt_program(G, cut.shape, [cut], tol, max_iter)


def decomposition_residual(rho: np.ndarray, result: MixerResult) -> float:
    total = sum(s for _, s in result.decomposition)
    return float(np.max(np.abs(total - rho)))


def mapped_min_eigenvalues(result: MixerResult, config: MixerConfig) -> Mapping[str, float]:
    """Smallest eigenvalue of every constrained operator of a mixer decomposition."""
    out = {}
    for cut, sigma in result.decomposition:
        out[f"{cut.label}"] = float(np.linalg.eigvalsh(sigma)[0])
        for m in config.maps_per_cut[cut]:
            out[f"{cut.label}:{m}"] = float(np.linalg.eigvalsh(hermitize(_map_op(m, cut)(sigma)))[0])
    return out
