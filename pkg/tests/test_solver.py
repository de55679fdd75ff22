import numpy as np
import pytest
import scipy.sparse

from conftest import B, F, U, random_trimap
from ssmatte.dataterm import compute_data_term, data_weights
from ssmatte.errors import BadLambda, LengthMismatch, NoUnknownPixels, NotConverged
from ssmatte.metrics import mse
from ssmatte.smoothterm import matting_laplacian
from ssmatte.solver import (CombinedSystem, assemble, compose_matte, conjugate_gradient, partition,
                            solve_cg)
from ssmatte.ssl import RefinementParams, run_pipeline
from ssmatte.synthetic import gray_ramp_case


def random_instance(rng, h, w, lam):
    img = rng.random((h, w, 3))
    tri = random_trimap(rng, h, w)
    fld = compute_data_term(img, tri)
    wf, wb = data_weights(fld, tri)
    L_lap = matting_laplacian(img)
    return img, tri, wf, wb, L_lap, partition(assemble(lam, wf, wb, L_lap), tri)


def terminal_graph_solve(lam, wf, wb, L_lap, tri):
    """Solve with the two terminal nodes kept explicitly (dense)."""
    n = L_lap.shape[0]
    G = np.zeros((n + 2, n + 2))
    G[:n, :n] = (1 - lam) * L_lap.toarray()
    # terminal edge Laplacian: i--T_F weight lam*wf, i--T_B weight lam*wb
    for t, w in ((n, lam * wf), (n + 1, lam * wb)):
        idx = np.arange(n)
        G[idx, idx] += w
        G[t, t] += w.sum()
        G[idx, t] -= w
        G[t, idx] -= w
    labels = np.append(tri.ravel(), [F, B])
    unk = np.flatnonzero(labels == U)
    kn = np.flatnonzero(labels != U)
    qk = (labels[kn] == F).astype(float)
    return unk, np.linalg.solve(G[np.ix_(unk, unk)], -G[np.ix_(unk, kn)] @ qk)


class TestAssemble:
    def test_lambda_zero_is_laplacian(self):
        rng = np.random.default_rng(0)
        L_lap = matting_laplacian(rng.random((5, 5, 3)))
        sys_ = assemble(0.0, rng.random(25), rng.random(25), L_lap)
        np.testing.assert_array_equal(sys_.L.toarray(), L_lap.toarray())
        assert not sys_.terminal_rhs.any()

    def test_bad_lambda(self):
        L_lap = scipy.sparse.identity(3, format="csr")
        for lam in (-0.1, 1.5):
            with pytest.raises(BadLambda):
                assemble(lam, np.ones(3), np.ones(3), L_lap)

    def test_lambda_one_decouples(self):
        rng = np.random.default_rng(1)
        img, tri, wf, wb, L_lap, part = random_instance(rng, 6, 6, 1.0)
        q = solve_cg(part).x
        u = part.unknown
        np.testing.assert_allclose(q, wf[u] / (wf[u] + wb[u]), atol=1e-9)

    @pytest.mark.parametrize("lam", [0.0, 0.001, 0.3, 1.0])
    def test_matches_explicit_terminals(self, lam):
        rng = np.random.default_rng(int(lam * 1000) + 5)
        img, tri, wf, wb, L_lap, part = random_instance(rng, 6, 7, lam)
        unk, q_ref = terminal_graph_solve(lam, wf, wb, L_lap, tri)
        np.testing.assert_array_equal(unk, part.unknown)
        q = np.linalg.solve(part.L_u.toarray(), part.rhs)
        np.testing.assert_allclose(q, q_ref, atol=1e-8)


class TestPartition:
    def test_smallest(self):
        L = scipy.sparse.csr_matrix(np.array([[1.0, -1, 0], [-1, 2, -1], [0, -1, 1]]))
        part = partition(CombinedSystem(L, np.zeros(3), 0.0), np.array([[F, U, B]], dtype=np.uint8))
        assert part.L_u.shape == (1, 1)
        assert part.R.toarray().tolist() == [[-1.0, -1.0]]
        assert part.q_k.tolist() == [1.0, 0.0]
        assert part.rhs.tolist() == [1.0]

    def test_no_unknown(self):
        L = scipy.sparse.identity(2, format="csr")
        with pytest.raises(NoUnknownPixels):
            partition(CombinedSystem(L, np.zeros(2), 0.0), np.array([[F, B]], dtype=np.uint8))

    def test_submatrix_oracle(self):
        rng = np.random.default_rng(3)
        tri = np.full((4, 4), F, dtype=np.uint8)
        tri[2:, :] = B
        unk = rng.choice(np.arange(1, 15), size=5, replace=False)
        tri.ravel()[unk] = U
        L_lap = matting_laplacian(rng.random((4, 4, 3)))
        sys_ = assemble(0.01, rng.random(16), rng.random(16), L_lap)
        part = partition(sys_, tri)
        dense = sys_.L.toarray()
        u = np.flatnonzero(tri.ravel() == U)
        k = np.flatnonzero(tri.ravel() != U)
        assert part.L_u.shape == (5, 5)
        np.testing.assert_array_equal(part.L_u.toarray(), dense[np.ix_(u, u)])
        np.testing.assert_array_equal(part.R.toarray(), dense[np.ix_(u, k)])
        assert sorted(part.unknown.tolist() + part.known.tolist()) == list(range(16))


class TestCG:
    def test_scalar(self):
        res = conjugate_gradient(np.array([[4.0]]), np.array([2.0]))
        assert res.iterations == 1
        assert res.x[0] == 0.5

    def test_zero_rhs(self):
        res = conjugate_gradient(scipy.sparse.identity(4, format="csr") * 3, np.zeros(4))
        assert res.iterations == 0 and not res.x.any()

    def test_dense_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            h, w = rng.integers(3, 17, size=2)
            *_, part = random_instance(rng, h, w, rng.choice([0.0, 0.001, 0.1, 1.0]))
            q = solve_cg(part, tol=1e-10).x
            ref = np.linalg.solve(part.L_u.toarray(), part.rhs)
            assert np.max(np.abs(q - ref)) <= 1e-6

    def test_residual_contract(self):
        rng = np.random.default_rng(10)
        *_, part = random_instance(rng, 12, 12, 0.001)
        res = solve_cg(part, tol=1e-7)
        rel = np.linalg.norm(part.L_u @ res.x - part.rhs) / np.linalg.norm(part.rhs)
        assert rel <= 1e-7
        assert res.residual == pytest.approx(rel)

    def test_not_converged(self):
        rng = np.random.default_rng(12)
        *_, part = random_instance(rng, 14, 14, 0.001)
        with pytest.raises(NotConverged) as info:
            solve_cg(part, tol=1e-14, max_iter=2)
        assert info.value.iterations == 2
        assert info.value.solution.shape == part.rhs.shape

    def test_scale_invariance(self):
        rng = np.random.default_rng(13)
        *_, part = random_instance(rng, 8, 8, 0.01)
        x1 = conjugate_gradient(part.L_u, part.rhs, tol=1e-12).x
        x2 = conjugate_gradient(7.5 * part.L_u, 7.5 * part.rhs, tol=1e-12).x
        np.testing.assert_allclose(x1, x2, atol=1e-9)


def test_energy_optimality():
    rng = np.random.default_rng(21)
    for lam in (0.001, 0.2):
        img, tri, wf, wb, L_lap, part = random_instance(rng, 8, 8, lam)
        q_u = solve_cg(part, tol=1e-12).x
        q = (tri.ravel() == F).astype(float)
        q[part.unknown] = q_u
        Ld = L_lap.toarray()

        def energy(v):
            return 0.5 * ((1 - lam) * v @ Ld @ v + lam * np.sum(wf * (v - 1) ** 2 + wb * v**2))

        e0 = energy(q)
        for i in part.unknown:
            for d in (1e-3, -1e-3):
                v = q.copy()
                v[i] += d
                assert energy(v) >= e0 - 1e-15


class TestComposeMatte:
    def test_all_known(self):
        tri = np.array([[F, B], [B, F]], dtype=np.uint8)
        assert compose_matte(np.zeros(0), tri).tolist() == [[1.0, 0.0], [0.0, 1.0]]

    def test_clamp_and_place(self):
        tri = np.array([[F, U, B, U]], dtype=np.uint8)
        assert compose_matte([0.42, 1.07], tri).tolist() == [[1.0, 0.42, 0.0, 1.0]]

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            compose_matte([0.1, 0.2], np.array([[F, U, B]], dtype=np.uint8))


def test_gray_ramp_recovery():
    case = gray_ramp_case(32)
    matte, _ = run_pipeline(case.image, case.trimap, 0.001, RefinementParams(n_iters=0))
    assert mse(matte, case.alpha, case.trimap == U) <= 5e-2
