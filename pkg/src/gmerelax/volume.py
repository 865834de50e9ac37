"""Monte Carlo mean widths of state sets and the analytic bounds they are
compared against.

The Gaussian mean width of a convex body ``K`` around the maximally mixed state
is ``w(K) = E max_{M in K} Tr(G M) / E ||G||_HS`` with ``G`` a traceless GUE
matrix (directions in the hyperplane of trace-zero operators).  Each estimator
draws directions from per-trial substreams ``(seed, trial)`` and sums with
``math.fsum``, so results are independent of scheduling and of ``jobs``.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .hermitian import SubsystemShape, enumerate_bipartitions, partial_transpose
from .relaxations import ppt_support
from .solver import SolverError
from .states import GueModelParams, gue, make_rng, rho_g, traceless_gue
from .witnesses import bisep_max_estimate

log = logging.getLogger(__name__)

MAX_SDP_DIM = 128


# --------------------------------------------------------------------------
# constants and bounds


def _c_objective(delta: float) -> float:
    return 6.0 * math.sqrt(math.log(1.0 + 2.0 / delta)) / (1.0 - 2.0 * delta**2) ** 2


@dataclass(frozen=True)
class VolumeConstants:
    C: float
    delta: float
    c_ppt: float

    @staticmethod
    def C_dk(d: int, k: int) -> float:
        return math.sqrt(8.0 * math.log(2.0) / d ** (k - 1))

    @staticmethod
    def vrad_states_ref(n: int) -> float:
        return math.exp(-0.25) / math.sqrt(n)

    @staticmethod
    def w_states_ref(n: int) -> float:
        return 2.0 / math.sqrt(n)

    def bisep_upper_bound(self, d: int, k: int) -> float:
        """Upper bound on the mean width of the biseparable states."""
        return (self.C + self.C_dk(d, k)) / d ** ((k + 1) / 2)

    def ppt_lower_bound(self, d: int, k: int, c_d: float = 1.0) -> float:
        """Lower bound on the mean width of the fully PPT states, with the
        unspecified dimension constant ``c_d`` taken as 1."""
        return c_d * self.c_ppt ** (2**k) / d ** (k / 2)


def compute_constants() -> VolumeConstants:
    res = minimize_scalar(_c_objective, bounds=(0.1, 0.25), method="bounded",
                          options={"xatol": 1e-10})
    C = float(res.fun)
    if not C <= 11:
        raise ArithmeticError(f"recomputed C = {C} exceeds 11")
    return VolumeConstants(C=C, delta=float(res.x), c_ppt=math.exp(-0.25) / 4)


# --------------------------------------------------------------------------
# sampling helpers


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("GMERELAX_JOBS", "1")))
    except ValueError:
        return 1


def _run_trials(fn: Callable, args: Sequence[tuple], jobs: int | None) -> list:
    jobs = default_jobs() if jobs is None else max(1, int(jobs))
    if jobs == 1 or len(args) < 2:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, *zip(*args), chunksize=max(1, len(args) // (4 * jobs))))


def _direction(n: int, seed: int, trial: int) -> np.ndarray:
    return traceless_gue(n, make_rng(seed, trial))


@dataclass
class WidthEstimate:
    """Mean-width estimate ``mean(h) / mean(||G||)`` together with raw data."""

    value: float
    stderr: float
    gamma: float
    trials: int
    failures: int = 0
    supports: list[float] = field(default_factory=list, repr=False)

    def __float__(self) -> float:
        return self.value


def _estimate(supports: Sequence[float | None], norms: Sequence[float]) -> WidthEstimate:
    pairs = [(h, g) for h, g in zip(supports, norms) if h is not None]
    failures = len(supports) - len(pairs)
    if not pairs:
        raise SolverError("every trial failed")
    hs = [h for h, _ in pairs]
    gamma = math.fsum(norms) / len(norms)
    mean_h = math.fsum(hs) / len(hs)
    var = math.fsum((h - mean_h) ** 2 for h in hs) / max(1, len(hs) - 1)
    return WidthEstimate(mean_h / gamma, math.sqrt(var / len(hs)) / gamma, gamma, len(hs), failures, hs)


def gamma_n(n: int, trials: int, seed: int) -> float:
    """Monte Carlo estimate of ``E ||G||_HS`` for a GUE matrix of size ``n``."""
    vals = [float(np.linalg.norm(gue(n, make_rng(seed, t)))) for t in range(trials)]
    return math.fsum(vals) / trials


def _lmax_trial(n: int, seed: int, t: int) -> tuple[float, float]:
    G = gue(n, make_rng(seed, t))
    return float(np.linalg.eigvalsh(G)[-1]), float(np.linalg.norm(G))


def mean_width_states(n: int, trials: int, seed: int, jobs: int | None = None) -> WidthEstimate:
    """``mean(lambda_max(G)) / mean(||G||)`` over GUE samples; about ``2 / sqrt(n)``."""
    out = _run_trials(_lmax_trial, [(n, seed, t) for t in range(trials)], jobs)
    return _estimate([h for h, _ in out], [g for _, g in out])


def _check_size(d: int, k: int) -> SubsystemShape:
    shape = SubsystemShape((d,) * k)
    if shape.total > MAX_SDP_DIM:
        raise ValueError(f"d^k = {shape.total} exceeds the supported size {MAX_SDP_DIM}")
    return shape


def _ppt_trial(d: int, k: int, seed: int, t: int) -> tuple[float | None, float]:
    shape = SubsystemShape((d,) * k)
    G = _direction(shape.total, seed, t)
    try:
        h = ppt_support(G, shape)
    except SolverError as exc:
        log.warning("ppt support failed for trial %d: %s", t, exc)
        h = None
    return h, float(np.linalg.norm(G))


def _bisep_trial(d: int, k: int, restarts: int, seed: int, t: int) -> tuple[float, float]:
    shape = SubsystemShape((d,) * k)
    G = _direction(shape.total, seed, t)
    return bisep_max_estimate(G, shape, restarts, seed=_restart_seed(seed, t)), float(np.linalg.norm(G))


def _restart_seed(seed: int, t: int) -> int:
    return int(np.random.SeedSequence([seed, t, 0x5EE5A]).generate_state(1)[0])


def mean_width_ppt(d: int, k: int, trials: int, seed: int, jobs: int | None = None) -> WidthEstimate:
    """Mean width of the fully PPT states; one SDP per direction."""
    _check_size(d, k)
    out = _run_trials(_ppt_trial, [(d, k, seed, t) for t in range(trials)], jobs)
    return _estimate([h for h, _ in out], [g for _, g in out])


def mean_width_bisep(d: int, k: int, trials: int, restarts: int, seed: int,
                     jobs: int | None = None) -> WidthEstimate:
    """Lower estimate of the mean width of the biseparable states.

    The support function is the largest ``<phi|G|phi>`` over vectors that are
    product across some cut, found by seesaw, so each term underestimates.
    """
    _check_size(d, k)
    out = _run_trials(_bisep_trial, [(d, k, restarts, seed, t) for t in range(trials)], jobs)
    return _estimate([h for h, _ in out], [g for _, g in out])


# --------------------------------------------------------------------------
# scaling study


@dataclass
class StudyRecord:
    d: int
    k: int
    trials: int
    seed: int
    w_states: float
    w_ppt: float
    w_bisep: float
    bound_ppt: float
    bound_bisep: float
    ratio: float
    failures: int = 0

    CSV_FIELDS = ("d", "k", "trials", "seed", "w_states", "w_ppt", "w_bisep",
                  "bound_ppt", "bound_bisep", "ratio")


def _study_trial(d: int, k: int, restarts: int, seed: int, t: int):
    shape = SubsystemShape((d,) * k)
    G = _direction(shape.total, seed, t)
    try:
        h_ppt = ppt_support(G, shape)
    except SolverError as exc:
        log.warning("ppt support failed for d=%d trial %d: %s", d, t, exc)
        h_ppt = None
    h_sep = bisep_max_estimate(G, shape, restarts, seed=_restart_seed(seed, t))
    return float(np.linalg.eigvalsh(G)[-1]), h_ppt, h_sep, float(np.linalg.norm(G))


def scaling_study(d_list: Iterable[int], k: int, trials: int, seed: int,
                  restarts: int = 8, jobs: int | None = None) -> list[StudyRecord]:
    """Mean widths of the states, the fully PPT states and the biseparable
    states for each ``d``, all on common directions per ``d``."""
    consts = compute_constants()
    records = []
    for d in d_list:
        _check_size(d, k)
        out = _run_trials(_study_trial, [(d, k, restarts, seed, t) for t in range(trials)], jobs)
        norms = [o[3] for o in out]
        w_states = _estimate([o[0] for o in out], norms)
        w_ppt = _estimate([o[1] for o in out], norms)
        w_sep = _estimate([o[2] for o in out], norms)
        records.append(StudyRecord(
            d=d, k=k, trials=trials, seed=seed,
            w_states=w_states.value, w_ppt=w_ppt.value, w_bisep=w_sep.value,
            bound_ppt=consts.ppt_lower_bound(d, k), bound_bisep=consts.bisep_upper_bound(d, k),
            ratio=w_ppt.value / w_sep.value, failures=w_ppt.failures,
        ))
    return records


def check_study(records: Sequence[StudyRecord]) -> list[str]:
    """Problems with a study: bound violations or a non-increasing ratio."""
    problems = []
    for r in records:
        if r.w_bisep > r.bound_bisep:
            problems.append(f"d={r.d}: biseparable width {r.w_bisep:.6g} above bound {r.bound_bisep:.6g}")
        if r.w_ppt < r.bound_ppt:
            problems.append(f"d={r.d}: PPT width {r.w_ppt:.6g} below bound {r.bound_ppt:.6g}")
    for prev, cur in zip(records, records[1:]):
        if not cur.ratio > prev.ratio:
            problems.append(f"ratio not increasing from d={prev.d} ({prev.ratio:.6g}) to d={cur.d} ({cur.ratio:.6g})")
    return problems


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def study_csv(records: Sequence[StudyRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(StudyRecord.CSV_FIELDS)
    for r in records:
        row = asdict(r)
        w.writerow([_fmt(row[f]) for f in StudyRecord.CSV_FIELDS])
    return buf.getvalue()


# --------------------------------------------------------------------------
# the random state model


@dataclass
class PptProbability:
    fraction: float
    trials: int
    min_eigenvalue: float

    def __float__(self) -> float:
        return self.fraction


def _ppt_check_trial(params: GueModelParams, t: int) -> float:
    rho, _ = rho_g(params, t)
    shape = SubsystemShape((params.d,) * params.k)
    lams = [float(np.linalg.eigvalsh(rho)[0])]
    for cut in enumerate_bipartitions(shape):
        lams.append(float(np.linalg.eigvalsh(partial_transpose(rho, cut))[0]))
    return min(lams)


def fully_ppt_probability(params: GueModelParams, trials: int, jobs: int | None = None) -> PptProbability:
    """Fraction of noisy maximally mixed states that are positive and PPT on
    every cut, with the smallest eigenvalue seen across all checks."""
    lams = _run_trials(_ppt_check_trial, [(params, t) for t in range(trials)], jobs)
    ok = sum(1 for lam in lams if lam >= 0.0)
    return PptProbability(ok / trials, trials, min(lams))


@dataclass
class WitnessStats:
    mean_x: float
    std_x: float
    mean_y: float
    std_y: float
    mean_ratio: float
    fraction_separated: float
    mean_m_state: float
    mean_m_bisep: float
    expected_x: float
    trials: int
    x: list[float] = field(default_factory=list, repr=False)
    y: list[float] = field(default_factory=list, repr=False)

    @property
    def mean_x_ok(self) -> bool:
        return abs(self.mean_x - self.expected_x) <= 0.05 * self.expected_x


def _stats_trial(params: GueModelParams, restarts: int, t: int) -> tuple[float, float]:
    rho, G = rho_g(params, t)
    x = float(np.vdot(rho, G).real)
    if restarts <= 0:
        return x, math.nan
    shape = SubsystemShape((params.d,) * params.k)
    y = bisep_max_estimate(G, shape, restarts, seed=_restart_seed(params.seed, t))
    return x, y


def _mean_std(v: Sequence[float]) -> tuple[float, float]:
    m = math.fsum(v) / len(v)
    s = math.sqrt(math.fsum((a - m) ** 2 for a in v) / max(1, len(v) - 1))
    return m, s


def gme_witness_stats(params: GueModelParams, trials: int, restarts: int,
                      jobs: int | None = None) -> WitnessStats:
    """Per trial ``x = Tr(rho_G G)`` and ``y`` = seesaw estimate of the largest
    ``Tr(sigma G)`` over biseparable ``sigma``.

    For ``beta = 1 / sqrt(x y)`` the operator ``M = 1 - beta G`` has
    ``Tr(rho_G M) = 1 - beta x`` and biseparable minimum about ``1 - beta y``;
    it separates ``rho_G`` whenever ``x > y``.  ``restarts = 0`` skips the
    seesaw and only collects ``x``.
    """
    out = _run_trials(_stats_trial, [(params, restarts, t) for t in range(trials)], jobs)
    xs = [o[0] for o in out]
    ys = [o[1] for o in out]
    n = params.n
    expected = params.alpha * (n * n - 1) / n**1.5
    mx, sx = _mean_std(xs)
    if restarts > 0:
        my, sy = _mean_std(ys)
        ratios = [x / y for x, y in zip(xs, ys)]
        betas = [1.0 / math.sqrt(x * y) if x > 0 and y > 0 else math.nan for x, y in zip(xs, ys)]
        m_state = [1 - b * x for b, x in zip(betas, xs) if not math.isnan(b)]
        m_sep = [1 - b * y for b, y in zip(betas, ys) if not math.isnan(b)]
        stats = (my, sy, math.fsum(ratios) / trials, sum(r > 1 for r in ratios) / trials,
                 math.fsum(m_state) / max(1, len(m_state)), math.fsum(m_sep) / max(1, len(m_sep)))
    else:
        stats = (math.nan,) * 6
    return WitnessStats(mx, sx, *stats, expected, trials, xs, ys)
