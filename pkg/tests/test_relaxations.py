import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gmerelax.hermitian import DimensionError, enumerate_bipartitions, partial_transpose, projector
from gmerelax.positive_maps import choi_map, dual_map, transpose_map
from gmerelax.relaxations import (
    MAX_DISTANCE_DIM,
    MixerConfig,
    decomposition_residual,
    mapped_min_eigenvalues,
    membership_distance,
    mixer,
    per_cut_ppt_support,
    ppt_support,
)
from gmerelax.states import ghz, make_rng, maximally_mixed, random_product_state, traceless_gue
from gmerelax.witnesses import bisep_max_estimate

BELL = [
    np.array([1, 0, 0, 1]) / np.sqrt(2),
    np.array([1, 0, 0, -1]) / np.sqrt(2),
    np.array([0, 1, 1, 0]) / np.sqrt(2),
    np.array([0, 1, -1, 0]) / np.sqrt(2),
]


def ghz_noisy(p, k=3):
    n = 2**k
    return p * projector(ghz(k)) + (1 - p) * np.eye(n) / n


def test_ghz_detected():
    res = mixer(projector(ghz(3)), MixerConfig.ppt((2, 2, 2)))
    assert res.detected_gme
    assert res.verdict == "detected"
    assert res.s_opt < -0.05
    assert decomposition_residual(projector(ghz(3)), res) < 1e-12


def test_maximally_mixed_not_detected():
    res = mixer(maximally_mixed(8), MixerConfig.ppt((2, 2, 2)))
    assert not res.detected_gme
    assert res.s_opt == pytest.approx(1 / 24, abs=1e-6)
    assert res.verdict == "not detected"


@pytest.mark.parametrize("p, detected", [(0.35, False), (0.42, False), (0.44, True), (0.6, True)])
def test_ghz_noise_threshold(p, detected):
    # for GHZ-diagonal three-qubit states the PPT mixer is exact: GME iff p > 3/7
    res = mixer(ghz_noisy(p), MixerConfig.ppt((2, 2, 2)))
    assert res.detected_gme == detected


def test_bell_diagonal_grid_oracle():
    # with one cut the mixer has no freedom: s = min(lambda_min(rho), lambda_min(rho^Gamma))
    cut = enumerate_bipartitions((2, 2))[0]
    grid = np.linspace(0, 1, 5)
    for a in grid:
        for b in grid:
            for c in grid:
                if a + b + c > 1:
                    continue
                lam = np.array([a, b, c, 1 - a - b - c])
                rho = sum(l * projector(v) for l, v in zip(lam, BELL))
                expected = min(lam.min(), 0.5 - lam.max())
                res = mixer(rho, MixerConfig.ppt((2, 2)))
                assert res.s_opt == pytest.approx(expected, abs=1e-6)
                direct = np.linalg.eigvalsh(partial_transpose(rho, cut))[0]
                assert direct == pytest.approx(0.5 - lam.max(), abs=1e-12)


def test_more_maps_never_increase_s():
    shape = (3, 3)
    rng = make_rng(31)
    G = rng.normal(size=(9, 4)) + 1j * rng.normal(size=(9, 4))
    rho = G @ G.conj().T
    rho /= np.trace(rho).real
    base = MixerConfig.ppt(shape)
    more = MixerConfig.uniform(shape, [transpose_map(), choi_map(), dual_map(choi_map())])
    s1 = mixer(rho, base).s_opt
    s2 = mixer(rho, more).s_opt
    assert s2 <= s1 + 1e-7


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_biseparable_mixture_not_detected(seed):
    rng = make_rng(seed)
    shape = (2, 2, 2)
    cuts = enumerate_bipartitions(shape)
    weights = rng.dirichlet(np.ones(6))
    rho = sum(w * projector(random_product_state(shape, cuts[i % 3], rng)) for i, w in enumerate(weights))
    res = mixer(rho, MixerConfig.ppt(shape))
    assert res.s_opt >= -1e-7
    assert not res.detected_gme


def test_mapped_min_eigenvalues_bounded_by_s():
    config = MixerConfig.ppt((2, 2, 2))
    res = mixer(ghz_noisy(0.8), config)
    mins = mapped_min_eigenvalues(res, config)
    assert len(mins) == 6
    assert min(mins.values()) >= res.s_opt - 1e-6


def test_config_validation():
    with pytest.raises(DimensionError):
        MixerConfig.uniform((2, 2), [choi_map()], skip_incompatible=False)
    with pytest.raises(ValueError):
        MixerConfig.uniform((2, 2), [choi_map()])  # no cut keeps a map
    cut = enumerate_bipartitions((3, 3))[0]
    cfg = MixerConfig.ppt((3, 3)).extended(cut, [choi_map()])
    assert [str(m) for m in cfg.maps_per_cut[cut]] == ["ppt", "choi"]
    with pytest.raises(DimensionError):
        mixer(np.eye(4) / 4, MixerConfig.ppt((2, 2, 2)))


@pytest.mark.parametrize("p", [0.0, 0.2, 1 / 3, 0.6, 1.0])
def test_isotropic_distance_oracle(p):
    # twirling maps the separable set onto itself, so the nearest point is the
    # boundary state at p = 1/3 whenever p exceeds it
    rho = p * projector(BELL[0]) + (1 - p) * np.eye(4) / 4
    res = membership_distance(rho, MixerConfig.ppt((2, 2)))
    expected = max(0.0, p - 1 / 3) * np.sqrt(3 / 4)
    assert res.distance == pytest.approx(expected, abs=1e-5)
    assert np.trace(res.closest).real == pytest.approx(1, abs=1e-7)
    assert res.member() == (expected == 0)


def test_ghz_distance_positive():
    res = membership_distance(projector(ghz(3)), MixerConfig.ppt((2, 2, 2)))
    assert res.distance > 0.5
    assert not res.member()
    assert len(res.components) == 3
    for cut, sigma in res.components:
        assert np.linalg.eigvalsh(sigma)[0] >= -1e-6
        assert np.linalg.eigvalsh(partial_transpose(sigma, cut))[0] >= -1e-6


def test_distance_dimension_guard():
    with pytest.raises(DimensionError, match="up to 32"):
        membership_distance(np.eye(64) / 64, MixerConfig.ppt((4, 4, 4)))
    assert MAX_DISTANCE_DIM == 32


@pytest.mark.parametrize("d", [2, 3])
def test_ppt_support_bounds(d):
    shape = (d, d)
    cut = enumerate_bipartitions(shape)[0]
    for t in range(3):
        G = traceless_gue(d * d, make_rng(32, d, t))
        h = ppt_support(G, shape)
        assert h <= np.linalg.eigvalsh(G)[-1] + 1e-7
        assert h >= bisep_max_estimate(G, shape, restarts=8, seed=t) - 1e-6
        assert h == pytest.approx(per_cut_ppt_support(G, cut), abs=1e-7)


def test_ppt_support_three_parties_is_tighter_than_one_cut():
    shape = (2, 2, 2)
    G = traceless_gue(8, make_rng(33))
    h_all = ppt_support(G, shape)
    for cut in enumerate_bipartitions(shape):
        assert h_all <= per_cut_ppt_support(G, cut) + 1e-7


def test_ppt_support_rejects_trace():
    with pytest.raises(ValueError, match="traceless"):
        ppt_support(np.eye(4), (2, 2))
