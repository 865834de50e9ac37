"""Entanglement witnesses: lifting bipartite witnesses, optimisation, and
realignment (CCNR) based constructions.

Lifting.  Given bipartite witnesses ``W_b`` (one per cut) write
``W_b = Q + T_b`` with the entrywise common part

    N = min(0, max_b Re W_b),   P = max(0, min_b Re W_b),   Q = N + P.

Then ``W_gme = Q + sum_b [T_b]_+`` dominates every ``W_b`` and is therefore
non-negative on all biseparable states.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .hermitian import (
    Bipartition,
    DimensionError,
    SubsystemShape,
    as_shape,
    enumerate_bipartitions,
    group_parties,
    hermitize,
    kron_across,
    positive_part,
    projector,
    realign,
)
from .lmi import LmiBuilder
from .positive_maps import PositiveMapSpec, apply_on_subsystem, dual_map, map_side
from .solver import SolverError, Status
from .states import make_rng, product_vector, random_unit_vector

WEAK_OPTIMALITY_TOL = 1e-5
DOMINANCE_TOL = 1e-9


@dataclass
class WitnessSet:
    shape: SubsystemShape
    per_cut: dict[Bipartition, np.ndarray]
    alphas: dict[Bipartition, float] | None = None

    def __post_init__(self) -> None:
        self.shape = as_shape(self.shape)
        if not self.per_cut:
            raise ValueError("a witness set needs at least one witness")
        n = self.shape.total
        for cut, W in self.per_cut.items():
            if cut.shape != self.shape:
                raise DimensionError(f"cut {cut.label} does not belong to dims {self.shape.dims}")
            if np.shape(W) != (n, n):
                raise DimensionError(f"witness for {cut.label} has shape {np.shape(W)}, expected {(n, n)}")

    @property
    def cuts(self) -> list[Bipartition]:
        return list(self.per_cut)

    def matrices(self) -> list[np.ndarray]:
        return [np.asarray(W) for W in self.per_cut.values()]


@dataclass
class LiftedWitness:
    Q: np.ndarray
    W_gme: np.ndarray
    per_cut_T_plus: dict[Bipartition, np.ndarray]
    dominance: dict[Bipartition, float]

    def expectation(self, rho: np.ndarray) -> float:
        return float(np.vdot(self.W_gme, rho).real)


def common_part_q(ws: WitnessSet) -> np.ndarray:
    """Entrywise common part ``Q = N + P`` of the real parts of the witnesses."""
    R = np.array([np.asarray(W).real for W in ws.matrices()])
    N = np.minimum(0.0, R.max(axis=0))
    P = np.maximum(0.0, R.min(axis=0))
    return N + P


def lift(ws: WitnessSet) -> LiftedWitness:
    """Combine bipartite witnesses into a witness for genuine multipartite entanglement."""
    Q = common_part_q(ws)
    t_plus = {cut: positive_part(hermitize(np.asarray(W) - Q)) for cut, W in ws.per_cut.items()}
    W_gme = hermitize(Q + sum(t_plus.values()))
    dominance = {}
    for cut, W in ws.per_cut.items():
        lam = float(np.linalg.eigvalsh(hermitize(W_gme - W))[0])
        scale = max(1.0, float(np.max(np.abs(W))))
        if lam < -DOMINANCE_TOL * scale:
            raise ArithmeticError(f"lifted witness fails to dominate cut {cut.label}: {lam:.3e}")
        dominance[cut] = lam
    return LiftedWitness(Q, W_gme, t_plus, dominance)


def witness_from_map(map_: PositiveMapSpec, cut: Bipartition, psi: np.ndarray,
                     side: Sequence[int] | None = None) -> np.ndarray:
    """``(Lambda^* (x) id)[|psi><psi|]``, non-negative on states separable across ``cut``."""
    psi = np.asarray(psi, dtype=complex).ravel()
    if psi.shape[0] != cut.shape.total:
        raise DimensionError(f"vector of length {psi.shape[0]} does not fit dims {cut.shape.dims}")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise ValueError("psi must be a unit vector")
    if side is None:
        side = map_side(map_, cut)
    return hermitize(apply_on_subsystem(dual_map(map_), cut, projector(psi), list(side)))


def map_induced_witnesses(map_: PositiveMapSpec, shape, psi: np.ndarray,
                          cuts: Iterable[Bipartition] | None = None) -> WitnessSet:
    """One map-induced witness per cut built from the same vector."""
    shape = as_shape(shape)
    cuts = enumerate_bipartitions(shape) if cuts is None else list(cuts)
    return WitnessSet(shape, {cut: witness_from_map(map_, cut, psi) for cut in cuts})


@dataclass
class WitnessSdpResult:
    witness: np.ndarray | None
    objective: float
    status: str

    @property
    def bounded(self) -> bool:
        return self.witness is not None


def optimal_witness_sdp(rho: np.ndarray, ws: WitnessSet,
                        mapped: PositiveMapSpec | Mapping[Bipartition, PositiveMapSpec] | None = None,
                        tol: float = 1e-7, max_iter: int = 200) -> WitnessSdpResult:
    """Minimise ``Tr(rho W)`` over ``W`` dominating every ``W_b``.

    With ``mapped`` the dominance is only required after applying the map of
    each cut, ``(Lambda (x) id)[W - W_b] >= 0``.  That program may be
    unbounded, in which case ``witness`` is None and the objective is -inf.
    """
    n = ws.shape.total
    rho = np.asarray(rho)
    if rho.shape != (n, n):
        raise DimensionError("state does not match the witness set")
    lb = LmiBuilder()
    W = lb.hermitian(n, "W")
    for cut, Wb in ws.per_cut.items():
        if mapped is None:
            lb.add_psd(-np.asarray(Wb), [(W, None)])
            continue
        m = mapped if isinstance(mapped, PositiveMapSpec) else mapped[cut]
        side = map_side(m, cut)

        def op(B, m=m, cut=cut, side=side):
            return apply_on_subsystem(m, cut, B, side)

        lb.add_psd(-hermitize(op(np.asarray(Wb))), [(W, op)])
    lb.maximize([(W, -rho)])
    sol = lb.solve(tol=tol, max_iter=max_iter)
    if sol.unbounded:
        return WitnessSdpResult(None, -np.inf, "unbounded")
    if sol.status is not Status.OPTIMAL:
        raise SolverError(f"optimal_witness_sdp: {sol.status.value}: {sol.sdp.message}", sol.sdp)
    return WitnessSdpResult(hermitize(sol.value(W)), -sol.objective, sol.status.value)


# --------------------------------------------------------------------------
# biseparable minimisation by seesaw


@dataclass
class BisepEstimate:
    value: float
    cut: Bipartition
    argmin: np.ndarray
    per_cut: dict[Bipartition, float] = field(default_factory=dict)
    per_cut_argmin: dict[Bipartition, np.ndarray] = field(default_factory=dict)

    @property
    def weakly_optimal(self) -> bool:
        return abs(self.value) <= WEAK_OPTIMALITY_TOL


def seesaw_cut(W: np.ndarray, cut: Bipartition, restarts: int, seed: int,
               stream: int = 0, max_iter: int = 500, tol: float = 1e-10) -> tuple[float, np.ndarray]:
    """Smallest ``<a (x) b|W|a (x) b>`` found from ``restarts`` random starts."""
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    T = np.ascontiguousarray(group_parties(np.asarray(W, dtype=complex), cut.shape.dims, sorted(cut.block)))
    da, db = T.shape[0], T.shape[1]
    best, best_vec = np.inf, None
    for r in range(restarts):
        rng = make_rng(seed, stream, r)
        a = random_unit_vector(da, rng)
        b = random_unit_vector(db, rng)
        val, a, b, _ = _kernels.seesaw(T, a, b, max_iter, tol)
        if val < best:
            best, best_vec = val, (a, b)
    return float(best), product_vector(cut, *best_vec)


def bisep_min_estimate(W: np.ndarray, shape, restarts: int = 32, seed: int = 0,
                       cuts: Iterable[Bipartition] | None = None) -> BisepEstimate:
    """Heuristic minimum of ``Tr(W sigma)`` over biseparable states.

    The minimum over biseparable states is attained on a pure state that is a
    product across some cut, so each cut is searched by alternating
    minimisation over the two factors.  The result is an upper bound on the true
    minimum.
    """
    shape = as_shape(shape)
    cuts = enumerate_bipartitions(shape) if cuts is None else list(cuts)
    per_cut, vecs = {}, {}
    for i, cut in enumerate(cuts):
        per_cut[cut], vecs[cut] = seesaw_cut(W, cut, restarts, seed, stream=i)
    best = min(per_cut, key=per_cut.get)
    return BisepEstimate(per_cut[best], best, vecs[best], per_cut, vecs)


def bisep_max_estimate(G: np.ndarray, shape, restarts: int = 8, seed: int = 0) -> float:
    """Heuristic maximum of ``Tr(G sigma)`` over biseparable states (a lower bound)."""
    return -bisep_min_estimate(-np.asarray(G), shape, restarts, seed).value


def is_weakly_optimal(W: np.ndarray, shape, restarts: int = 32, seed: int = 0) -> bool:
    return bisep_min_estimate(W, shape, restarts, seed).weakly_optimal


def tight_cut_witnesses(Q: np.ndarray, shape, restarts: int = 32, seed: int = 0) -> WitnessSet:
    """Witnesses ``W_b = Q - alpha_b |psi_b><psi_b|`` with ``alpha_b`` the
    (heuristic) minimum of ``<psi|Q|psi>`` over product vectors across ``b``.

    Each ``W_b`` vanishes on ``psi_b`` by construction.  The alphas are seesaw
    estimates, so they upper-bound the true minima.
    """
    shape = as_shape(shape)
    Q = np.asarray(Q)
    per_cut, alphas = {}, {}
    for i, cut in enumerate(enumerate_bipartitions(shape)):
        _, psi = seesaw_cut(Q, cut, restarts, seed, stream=i)
        alpha = float(np.vdot(psi, Q @ psi).real)
        alphas[cut] = alpha
        per_cut[cut] = hermitize(Q - alpha * projector(psi))
    return WitnessSet(shape, per_cut, alphas)


# --------------------------------------------------------------------------
# realignment


def ccnr_sum(rho: np.ndarray, cut: Bipartition) -> float:
    """Sum of singular values of the realigned matrix; above 1 certifies
    entanglement across the cut."""
    return float(np.linalg.svd(realign(np.asarray(rho), cut), compute_uv=False).sum())


@dataclass
class CcnrReport:
    orthonormal_block: bool
    orthonormal_rest: bool
    p_psd: bool
    reconstruction: bool
    errors: dict[str, float]

    @property
    def passed(self) -> bool:
        return self.orthonormal_block and self.orthonormal_rest and self.p_psd and self.reconstruction


def _gram_error(mats: Sequence[np.ndarray]) -> float:
    if not mats:
        return 0.0
    F = np.array([np.asarray(m).ravel() for m in mats])
    gram = F.conj() @ F.T
    return float(np.max(np.abs(gram - np.eye(len(mats)))))


def verify_ccnr_witness(W: np.ndarray, cut: Bipartition, P_b: np.ndarray,
                        G_pairs: Sequence[tuple[np.ndarray, np.ndarray]],
                        tol: float = 1e-10) -> CcnrReport:
    """Check ``W = P_b + 1 - sum_k G_k^b (x) G_k^rest`` with orthonormal
    observables on each side and ``P_b >= 0``."""
    n = cut.shape.total
    W = np.asarray(W)
    P_b = np.asarray(P_b)
    if W.shape != (n, n) or P_b.shape != (n, n):
        raise DimensionError("W and P_b must both act on the full space")
    db, dr = cut.side_dim(cut.block), cut.side_dim(cut.complement)
    for Gb, Gr in G_pairs:
        if np.shape(Gb) != (db, db) or np.shape(Gr) != (dr, dr):
            raise DimensionError("observable pair does not match the cut")
    eb = _gram_error([g for g, _ in G_pairs])
    er = _gram_error([g for _, g in G_pairs])
    lam = float(np.linalg.eigvalsh(hermitize(P_b))[0])
    recon = P_b + np.eye(n) - sum((kron_across(cut, Gb, Gr) for Gb, Gr in G_pairs), np.zeros((n, n)))
    erec = float(np.max(np.abs(recon - W)))
    return CcnrReport(eb <= tol, er <= tol, lam >= -1e-9, erec <= tol,
                      {"block": eb, "rest": er, "p_min_eig": lam, "reconstruction": erec})


# --------------------------------------------------------------------------
# three-qubit GHZ data


PAULI = {
    "1": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_string(label: str) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for ch in label:
        out = np.kron(out, PAULI[ch])
    return out


def ghz_stabilizer_expansion() -> np.ndarray:
    """``(111 + ZZ1 + Z1Z + 1ZZ + XXX - XYY - YXY - YYX) / 8``."""
    terms = {"111": 1, "ZZ1": 1, "Z1Z": 1, "1ZZ": 1, "XXX": 1, "XYY": -1, "YXY": -1, "YYX": -1}
    return sum(c * pauli_string(s) for s, c in terms.items()) / 8


def ghz_ccnr_decomposition() -> tuple[np.ndarray, np.ndarray, list[tuple[np.ndarray, np.ndarray]]]:
    """``(W, P, pairs)`` for ``W = 1 - 2|GHZ><GHZ|`` across the cut ``0|12``."""
    s2, s8 = np.sqrt(2.0), np.sqrt(8.0)
    p = pauli_string
    pairs = [
        (p("Z") / s2, (p("Z1") + p("1Z")) / s8),
        (p("X") / s2, (p("XX") - p("YY")) / s8),
        (-p("Y") / s2, (p("YX") + p("XY")) / s8),
        (p("1") / s2, (p("11") + p("ZZ")) / s8),
    ]
    W = np.eye(8) - 2 * ghz_stabilizer_expansion()
    return W, np.zeros((8, 8)), pairs
