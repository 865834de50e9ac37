import io
import json

import numpy as np
import pytest
from scipy import sparse

from gmerelax.lmi import LmiBuilder, coordinates, hermitian_basis
from gmerelax.solver import (
    SdpProblem,
    Status,
    embed_matrix,
    embed_real,
    solve,
    unembed_matrix,
    verify_certificate,
)
from gmerelax.states import make_rng


def random_hermitian(n, rng, complex_=True):
    M = rng.normal(size=(n, n))
    if complex_:
        M = M + 1j * rng.normal(size=(n, n))
    return (M + M.conj().T) / 2


def lambda_min_lmi(A, **kwargs):
    """max t subject to A - t 1 >= 0."""
    lmi = LmiBuilder()
    t = lmi.scalar("t")
    lmi.add_psd(A, [(t, -np.eye(A.shape[0]))])
    lmi.maximize([(t, 1.0)])
    return lmi.solve(**kwargs)


def trace_one_problem(C):
    """min <C, X> subject to Tr X = 1, X >= 0."""
    n = C.shape[0]
    A = sparse.csr_matrix(np.eye(n).reshape(1, -1))
    return SdpProblem([C], [A], [1.0])


def test_lambda_min_diagonal():
    sol = lambda_min_lmi(np.diag([3.0, 1.0, 4.0]))
    assert sol.status is Status.OPTIMAL
    assert sol.objective == pytest.approx(1.0, abs=1e-7)


def test_trace_one_primal():
    C = np.diag([3.0, 1.0, 4.0])
    sol = solve(trace_one_problem(C))
    assert sol.optimal
    assert sol.primal_objective == pytest.approx(1.0, abs=1e-7)
    assert np.allclose(sol.X[0], np.diag([0, 1, 0]), atol=1e-6)


@pytest.mark.parametrize("complex_", [False, True])
def test_lambda_min_random(complex_):
    rng = make_rng(11, int(complex_))
    for trial in range(25):
        n = int(rng.integers(2, 9))
        A = random_hermitian(n, rng, complex_)
        sol = lambda_min_lmi(A)
        assert sol.status is Status.OPTIMAL
        assert sol.objective == pytest.approx(np.linalg.eigvalsh(A)[0], abs=1e-6)


def test_lovasz_theta_of_pentagon():
    n = 5
    edges = [(i, (i + 1) % n) for i in range(n)]
    lmi = LmiBuilder()
    X = lmi.hermitian(n, "X", real=True)
    lmi.add_psd(np.zeros((n, n)), [(X, None)])
    lmi.add_equality([(X, np.eye(n))], 1.0)
    for i, j in edges:
        E = np.zeros((n, n))
        E[i, j] = E[j, i] = 1
        lmi.add_equality([(X, E)], 0.0)
    lmi.maximize([(X, np.ones((n, n)))])
    sol = lmi.solve()
    assert sol.status is Status.OPTIMAL
    assert sol.objective == pytest.approx(np.sqrt(5), abs=1e-6)
    Xv = sol.value(X)
    assert np.trace(Xv) == pytest.approx(1, abs=1e-7)


def test_primal_infeasible_instance():
    # Tr X = -1 has no PSD solution; the dual max -y, C - y 1 >= 0, is unbounded
    n = 3
    prob = SdpProblem([np.eye(n)], [sparse.csr_matrix(np.eye(n).reshape(1, -1))], [-1.0])
    sol = solve(prob)
    assert sol.status is Status.PRIMAL_INFEASIBLE


def test_dual_infeasible_instance():
    # min -Tr X subject to X00 - X11 = 0 is unbounded below, so the dual is infeasible
    C = -np.eye(2)
    A = sparse.csr_matrix(np.diag([1.0, -1.0]).reshape(1, -1))
    sol = solve(SdpProblem([C], [A], [0.0]))
    assert sol.status is Status.DUAL_INFEASIBLE


def test_lmi_unbounded_flag():
    lmi = LmiBuilder()
    t = lmi.scalar()
    lmi.add_psd(np.eye(2), [(t, np.eye(2))])  # 1 + t >= 0, t unbounded above
    lmi.maximize([(t, 1.0)])
    assert lmi.solve().unbounded


def test_lmi_infeasible_flag():
    lmi = LmiBuilder()
    t = lmi.scalar()
    lmi.add_psd(np.diag([1.0, -1.0]), [(t, np.diag([0.0, 0.0]) + np.diag([1.0, 0.0]))])
    lmi.maximize([(t, 1.0)])
    assert lmi.solve().infeasible


def test_weak_duality_against_feasible_points():
    rng = make_rng(12)
    C = random_hermitian(6, rng)
    sol = solve(trace_one_problem(C))
    assert sol.primal_objective - sol.dual_objective >= -1e-7 * (1 + abs(sol.primal_objective))
    for _ in range(20):
        G = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        X = G @ G.conj().T
        X /= np.trace(X).real
        assert np.vdot(C, X).real >= sol.dual_objective - 1e-7


def test_adding_constraints_is_monotone():
    rng = make_rng(13)
    n = 4
    B = random_hermitian(n, rng)
    # X = 1/n stays feasible, so every restriction keeps an optimum
    extra = []
    for _ in range(3):
        G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        extra.append(0.3 * np.eye(n) + G @ G.conj().T / 8)
    previous = np.inf
    lmi = LmiBuilder()
    X = lmi.hermitian(n)
    lmi.add_psd(np.zeros((n, n)), [(X, None)])
    lmi.add_equality([(X, np.eye(n))], 1.0)
    lmi.maximize([(X, B)])
    for F in extra:
        sol = lmi.solve()
        assert sol.status is Status.OPTIMAL
        val = sol.objective
        assert val <= previous + 1e-7
        previous = val
        lmi.add_psd(F, [(X, lambda S: -S)])
    assert lmi.solve().objective <= previous + 1e-7


def test_embedding_of_matrices():
    rng = make_rng(14)
    A = random_hermitian(4, rng)
    E = embed_matrix(A)
    lam = np.linalg.eigvalsh(A)
    assert np.allclose(np.linalg.eigvalsh(E), np.sort(np.repeat(lam, 2)))
    assert np.allclose(unembed_matrix(E, halve=True), A)
    B = random_hermitian(4, rng)
    assert np.trace(E @ embed_matrix(B)) == pytest.approx(2 * np.trace(A @ B).real)


def test_real_embedding_matches_native():
    rng = make_rng(15)
    n = 5
    C = random_hermitian(n, rng)
    rows = [np.eye(n)] + [random_hermitian(n, rng) for _ in range(3)]
    A = sparse.csr_matrix(np.array([r.ravel() for r in rows]))
    X0 = np.eye(n) / n
    b = [np.vdot(r, X0).real for r in rows]
    prob = SdpProblem([C], [A], b)
    native = solve(prob)
    embedded = solve(prob, real_embedding=True)
    assert native.optimal and embedded.optimal
    assert abs(native.primal_objective - embedded.primal_objective) <= 1e-7
    assert np.allclose(native.X[0], embedded.X[0], atol=1e-4)
    assert verify_certificate(prob, embedded).ok(1e-6)


def test_embed_real_problem_shapes():
    rng = make_rng(16)
    C = random_hermitian(3, rng)
    prob = trace_one_problem(C)
    emb, mask = embed_real(prob)
    assert mask == [True]
    assert emb.block_dims == [6]
    assert not np.iscomplexobj(emb.C[0])
    # the real problem only changes the real inner product by the factor of two in X
    X = np.eye(3) / 3
    assert emb.apply_A([embed_matrix(X) / 2])[0] == pytest.approx(1.0)


def test_verify_certificate_detects_perturbation():
    rng = make_rng(17)
    prob = trace_one_problem(random_hermitian(5, rng))
    sol = solve(prob)
    report = verify_certificate(prob, sol)
    assert report.ok(1e-6)
    assert report.min_eig_X >= -1e-9 and report.min_eig_Z >= -1e-9
    sol.y = sol.y + 1e-3
    assert verify_certificate(prob, sol).dual_residual > 1e-5
    assert not verify_certificate(prob, sol).ok(1e-6)


def test_trace_stream_and_env(tmp_path, monkeypatch):
    prob = trace_one_problem(np.diag([2.0, 1.0]))
    buf = io.StringIO()
    sol = solve(prob, trace=buf)
    lines = [json.loads(x) for x in buf.getvalue().splitlines()]
    assert len(lines) == len(sol.history) == sol.iterations + 1
    assert set(lines[0]) == {"iteration", "gap", "pres", "dres", "mu", "primal", "dual"}
    path = tmp_path / "trace.jsonl"
    monkeypatch.setenv("GMERELAX_SOLVER_TRACE", str(path))
    solve(prob)
    assert len(path.read_text().splitlines()) == len(lines)


def test_presolve_rejects_dependent_rows():
    n = 2
    row = np.eye(n).ravel()
    A = sparse.csr_matrix(np.array([row, 2 * row]))
    with pytest.raises(ValueError, match="dependent"):
        solve(SdpProblem([np.eye(n)], [A], [1.0, 2.0]))


def test_presolve_rejects_non_hermitian_rows():
    A = sparse.csr_matrix(np.array([[0.0, 1.0, 0.0, 0.0]]))
    with pytest.raises(ValueError, match="Hermitian"):
        solve(SdpProblem([np.eye(2)], [A], [1.0]))


def test_problem_shape_validation():
    with pytest.raises(ValueError):
        SdpProblem([np.eye(2)], [sparse.csr_matrix((1, 9))], [1.0])
    with pytest.raises(ValueError):
        SdpProblem([np.eye(2)], [sparse.csr_matrix((0, 4))], [])


def test_multiple_blocks_and_free_variables():
    # min x11 + y11 with Tr X + Tr Y = 2 and a free shift u: x00 - u = 0.5
    C = [np.diag([0.0, 1.0]), np.diag([0.0, 1.0])]
    rows0 = np.array([np.eye(2).ravel(), np.diag([1.0, 0.0]).ravel()])
    rows1 = np.array([np.eye(2).ravel(), np.zeros(4)])
    prob = SdpProblem(C, [sparse.csr_matrix(rows0), sparse.csr_matrix(rows1)], [2.0, 0.5],
                      free_cost=[0.0], free_A=[[0.0], [-1.0]])
    sol = solve(prob)
    assert sol.optimal
    assert sol.primal_objective == pytest.approx(0.0, abs=1e-7)


def test_hermitian_basis_is_orthonormal():
    for real in (False, True):
        B = hermitian_basis(4, real)
        G = np.einsum("pij,qij->pq", B.conj(), B).real
        assert np.allclose(G, np.eye(len(B)))
        assert len(B) == (10 if real else 16)
    rng = make_rng(18)
    H = random_hermitian(4, rng)
    assert np.allclose(np.tensordot(coordinates(H), hermitian_basis(4), axes=1), H)


def test_large_block_uses_pair_kernel():
    # a block bigger than the dense Schur threshold exercises the sparse path
    rng = make_rng(19)
    n = 12
    C = random_hermitian(n, rng)
    sol = lambda_min_lmi(C)
    assert sol.objective == pytest.approx(np.linalg.eigvalsh(C)[0], abs=1e-6)
    sol = solve(trace_one_problem(C))
    assert sol.primal_objective == pytest.approx(np.linalg.eigvalsh(C)[0], abs=1e-6)
