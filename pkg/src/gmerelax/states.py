"""Generators for concrete states and random models.

Random sampling uses the counter-based Philox generator.  A sample is
identified by ``(seed, stream...)``; every trial of a Monte Carlo study gets
its own stream ``(seed, trial)`` so results do not depend on execution order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hermitian import Bipartition, SubsystemShape, as_shape


def make_rng(seed: int | np.random.Generator | None, *stream: int) -> np.random.Generator:
    """Philox generator for ``(seed, *stream)``; generators are passed through."""
    if isinstance(seed, np.random.Generator):
        if stream:
            raise ValueError("cannot derive substreams from an existing generator")
        return seed
    if seed is None:
        seed = 0
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, stream)])))


# --------------------------------------------------------------------------
# pure states


def ghz(k: int, d: int = 2) -> np.ndarray:
    """``(|0...0> + |1...1> + ... + |d-1...d-1>) / sqrt(d)`` on k parties."""
    if k < 2 or d < 2:
        raise ValueError("ghz needs k >= 2 parties of local dimension d >= 2")
    n = d**k
    psi = np.zeros(n, dtype=complex)
    step = sum(d**i for i in range(k))
    psi[np.arange(d) * step] = 1.0 / np.sqrt(d)
    return psi


def basis_ket(label: str, d: int) -> np.ndarray:
    """Computational basis vector for a digit string such as ``"012"``."""
    v = np.zeros(d ** len(label), dtype=complex)
    v[int(label, d)] = 1.0
    return v


def random_unit_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unit vector in ``C^dim``."""
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_product_state(shape: SubsystemShape | Sequence[int], cut: Bipartition,
                         seed: int | np.random.Generator | None) -> np.ndarray:
    """Tensor product of Haar-random vectors on the two sides of ``cut``."""
    if as_shape(shape) != cut.shape:
        raise ValueError("cut does not belong to the given shape")
    rng = make_rng(seed)
    a = random_unit_vector(cut.side_dim(cut.block), rng)
    b = random_unit_vector(cut.side_dim(cut.complement), rng)
    return product_vector(cut, a, b)


def product_vector(cut: Bipartition, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``a (x) b`` (``a`` on the stored block) in the natural party order."""
    T = np.einsum("i,j->ij", a, b)
    dims = cut.shape.dims
    side = sorted(cut.block)
    rest = [p for p in range(len(dims)) if p not in side]
    order = side + rest
    full = T.reshape([dims[p] for p in order])
    return full.transpose(np.argsort(order)).reshape(-1)


# --------------------------------------------------------------------------
# the three-qutrit family


@dataclass(frozen=True)
class QutritFamilyParams:
    a: float
    b: float
    c: float
    p: float = 0.0

    def __post_init__(self) -> None:
        if not (self.a > 0 and self.b > 0 and self.c > 0):
            raise ValueError("a, b and c must be positive")
        if not self.p >= 0:
            raise ValueError("p must be nonnegative")


def qutrit_family_vectors(params: QutritFamilyParams) -> list[np.ndarray]:
    """The ten unnormalised vectors of the family, in their fixed order."""
    a, b, c = params.a, params.b, params.c

    def pair(weight: float, first: str, second: str) -> np.ndarray:
        return np.sqrt(weight) * basis_ket(first, 3) + np.sqrt(1.0 / weight) * basis_ket(second, 3)

    return [
        pair(a, "001", "110"),
        pair(a, "010", "101"),
        pair(a, "100", "011"),
        pair(b, "112", "221"),
        pair(b, "121", "212"),
        pair(b, "211", "122"),
        pair(c, "220", "002"),
        pair(c, "202", "020"),
        pair(c, "022", "200"),
        basis_ket("000", 3) + basis_ket("111", 3) + basis_ket("222", 3),
    ]


def qutrit_family_unnormalized(params: QutritFamilyParams) -> np.ndarray:
    rho = sum(np.outer(v, v.conj()) for v in qutrit_family_vectors(params))
    e001 = basis_ket("001", 3)
    return rho + params.p * (np.outer(e001, e001) + np.eye(27))


def qutrit_family(params: QutritFamilyParams) -> np.ndarray:
    """Normalised 27x27 density matrix of the three-qutrit family."""
    rho = qutrit_family_unnormalized(params)
    return rho / np.trace(rho).real


def qutrit_family_trace(params: QutritFamilyParams) -> float:
    a, b, c, p = params.a, params.b, params.c, params.p
    return 3 * (a + 1 / a) + 3 * (b + 1 / b) + 3 * (c + 1 / c) + 3 + 28 * p


# --------------------------------------------------------------------------
# Gaussian ensembles


def gue(n: int, seed: int | np.random.Generator | None = None) -> np.ndarray:
    """GUE sample: real N(0,1) diagonal, off-diagonal real and imaginary parts
    N(0, 1/2).  With this normalisation E Tr G^2 = n^2 and lambda_max ~ 2 sqrt(n)."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = make_rng(seed)
    M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (M + M.conj().T) / 2.0


def traceless(G: np.ndarray) -> np.ndarray:
    n = G.shape[0]
    return G - (np.trace(G).real / n) * np.eye(n)


def traceless_gue(n: int, seed: int | np.random.Generator | None = None) -> np.ndarray:
    return traceless(gue(n, seed))


@dataclass(frozen=True)
class GueModelParams:
    d: int
    k: int
    alpha: float
    seed: int = 0

    def __post_init__(self) -> None:
        if self.d < 2 or self.k < 2:
            raise ValueError("d and k must be at least 2")
        if not 0 < self.alpha < 0.25:
            raise ValueError(f"alpha must lie in (0, 1/4), got {self.alpha}")

    @property
    def n(self) -> int:
        return self.d**self.k


def rho_g_from(G: np.ndarray, alpha: float) -> np.ndarray:
    n = G.shape[0]
    rho = (np.eye(n) + (alpha / np.sqrt(n)) * G) / n
    # the trace of G is zero up to rounding; pin the normalisation exactly
    rho[np.diag_indices(n)] += (1.0 - np.trace(rho).real) / n
    return rho


def rho_g(params: GueModelParams, trial: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Maximally mixed state plus traceless Gaussian noise: ``(rho_G, G)``.

    ``trial`` selects the substream ``(seed, trial)``; the default uses the
    master stream.  The result is not guaranteed to be positive.
    """
    rng = make_rng(params.seed) if trial is None else make_rng(params.seed, trial)
    G = traceless_gue(params.n, rng)
    return rho_g_from(G, params.alpha), G


def maximally_mixed(n: int) -> np.ndarray:
    return np.eye(n, dtype=complex) / n


def random_density(n: int, seed: int | np.random.Generator | None = None, rank: int | None = None) -> np.ndarray:
    """Random density matrix ``W W^H / Tr`` from a complex Ginibre ``W``."""
    rng = make_rng(seed)
    rank = n if rank is None else rank
    W = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = W @ W.conj().T
    return rho / np.trace(rho).real
