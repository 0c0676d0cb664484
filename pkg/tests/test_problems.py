import numpy as np
import pytest

from mschwarz import (
    DiagonalModel,
    FiniteSplitting,
    MatrixSchwarzModel,
    Problem,
    SplittingComponent,
    energy_norm,
    local_solve,
    representation_norm_sq,
    stability_constants,
    uniform_bound_lambda,
)
from mschwarz.problems import UnstableSplittingError


def identity_splitting(problem):
    n = problem.n
    eye = np.eye(n)
    comps = [SplittingComponent(i + 1, eye[:, [i]], np.eye(1)) for i in range(n)]
    return FiniteSplitting(problem, comps)


def random_spd(rng, n):
    Q = rng.standard_normal((n, n))
    return Q @ Q.T + n * np.eye(n)


class TestEnergyNorm:
    def test_zero_vector(self):
        p = Problem(np.eye(3), np.zeros(3))
        assert energy_norm(p, np.zeros(3)) == 0.0

    def test_euclidean_identity(self):
        p = Problem(np.eye(2), np.zeros(2))
        assert energy_norm(p, np.array([3.0, 4.0])) == 5.0

    def test_diag_weighting(self):
        p = Problem(np.diag([2.0, 1.0]), np.zeros(2))
        assert energy_norm(p, np.array([1.0, 1.0])) == pytest.approx(np.sqrt(3.0), abs=1e-15)


class TestProblemValidation:
    def test_rejects_nonsymmetric(self):
        A = np.array([[2.0, 1.0], [0.0, 2.0]])
        with pytest.raises(ValueError, match="symmetric"):
            Problem(A, np.zeros(2))

    def test_rejects_indefinite(self):
        with pytest.raises(ValueError, match="positive definite"):
            Problem(np.diag([1.0, -1.0]), np.zeros(2))

    def test_rejects_wrong_exact_solution(self):
        with pytest.raises(ValueError, match="exact solution"):
            Problem(np.eye(2), np.ones(2), exact_solution=np.array([2.0, 2.0]))

    def test_accepts_correct_exact_solution(self):
        p = Problem(np.diag([2.0, 4.0]), np.array([2.0, 4.0]),
                    exact_solution=np.ones(2))
        assert np.allclose(p.exact_solution, 1.0)


class TestLocalSolve:
    def test_zero_residual(self):
        p = Problem(np.eye(2), np.zeros(2))
        c = SplittingComponent(1, np.eye(2)[:, [0]], np.eye(1))
        res = local_solve(p, c, np.zeros(2))
        assert res.local_norm == 0.0
        assert not np.any(res.r)

    def test_scalar_instance(self):
        # A = (2), b = (2), u = 0: g = (2), local solve 2 r = 2 -> r = 1
        p = Problem(np.array([[2.0]]), np.array([2.0]))
        c = SplittingComponent(1, np.array([[1.0]]), np.array([[2.0]]))
        res = local_solve(p, c, np.array([2.0]))
        assert res.r[0] == pytest.approx(1.0, abs=1e-15)
        assert res.local_norm == pytest.approx(np.sqrt(2.0), abs=1e-15)

    def test_diagonal_residual_matches_dense(self):
        # the coordinate splitting reduces the local solve to c_i - u_i
        model = DiagonalModel([0.9, -0.4, 0.3, 0.0, 0.2])
        problem, splitting = model.to_dense()
        rng = np.random.default_rng(3)
        u = rng.standard_normal(5)
        g = problem.b - problem.A @ u
        for i in range(1, 6):
            dense = local_solve(problem, splitting[i], g)
            lazy = model.coefficients[i - 1] - u[i - 1]
            assert dense.r[0] == pytest.approx(lazy, abs=1e-14)


class TestApplyUpdate:
    def test_identity_update(self):
        p = Problem(np.eye(3), np.ones(3))
        model = MatrixSchwarzModel(p, identity_splitting(p))
        state = model.new_state()
        state.u = np.array([0.3, 0.1, -0.2])
        state.w = p.A @ state.u
        before = state.u.copy()
        model.apply_update(state, 1, np.zeros(1), 1.0, 0.0)
        assert np.array_equal(state.u, before)

    def test_pure_replacement(self):
        p = Problem(np.eye(2), np.ones(2))
        comps = [SplittingComponent(1, np.eye(2), np.eye(2))]
        model = MatrixSchwarzModel(p, FiniteSplitting(p, comps))
        state = model.new_state()
        state.u = np.array([5.0, -1.0])
        v = np.array([1.0, 2.0])
        model.apply_update(state, 1, v, 0.0, 1.0)
        assert np.array_equal(state.u, v)

    def test_cache_tracks_dense_recomputation(self):
        rng = np.random.default_rng(11)
        A = random_spd(rng, 6)
        p = Problem(A, rng.standard_normal(6))
        model = MatrixSchwarzModel(p, identity_splitting(p))
        state = model.new_state()
        for _ in range(50):
            i = int(rng.integers(1, 7))
            r = rng.standard_normal(1)
            model.apply_update(state, i, r, 0.9, float(rng.standard_normal()))
        assert np.abs(state.w - A @ state.u).max() < 1e-9


class TestUniformBound:
    def test_orthonormal_model_is_isometric(self):
        model = DiagonalModel([1.0, 0.5])
        problem, splitting = model.to_dense()
        assert uniform_bound_lambda(problem, splitting) == pytest.approx(1.0, abs=1e-12)

    def test_scalar_generalized_eigenvalue(self):
        p = Problem(np.array([[2.0]]), np.array([1.0]))
        comps = [SplittingComponent(1, np.array([[1.0]]), np.array([[1.0]]))]
        lam = uniform_bound_lambda(p, FiniteSplitting(p, comps))
        assert lam == pytest.approx(np.sqrt(2.0), abs=1e-14)

    def test_local_form_rescaling_halves_lambda(self):
        p = Problem(np.array([[2.0]]), np.array([1.0]))
        base = FiniteSplitting(
            p, [SplittingComponent(1, np.array([[1.0]]), np.array([[1.0]]))]
        )
        scaled = FiniteSplitting(
            p, [SplittingComponent(1, np.array([[1.0]]), np.array([[4.0]]))]
        )
        assert uniform_bound_lambda(p, scaled) == pytest.approx(
            0.5 * uniform_bound_lambda(p, base), abs=1e-14
        )


class TestStability:
    def test_orthogonal_decomposition(self):
        model = DiagonalModel([1.0, 2.0, 3.0])
        problem, splitting = model.to_dense()
        sc = stability_constants(problem, splitting)
        assert sc.lam_min == pytest.approx(1.0, abs=1e-12)
        assert sc.lam_max == pytest.approx(1.0, abs=1e-12)
        assert sc.kappa == pytest.approx(1.0, abs=1e-12)

    def test_duplicated_component_doubles_spectrum(self):
        p = Problem(np.eye(1), np.ones(1))
        comp = lambda i: SplittingComponent(i, np.array([[1.0]]), np.array([[1.0]]))
        sc = stability_constants(p, FiniteSplitting(p, [comp(1), comp(2)]))
        assert sc.lam_min == pytest.approx(2.0, abs=1e-12)
        assert sc.lam_max == pytest.approx(2.0, abs=1e-12)

    def test_rank_deficient_reports_unstable(self):
        with pytest.raises(UnstableSplittingError):
            p = Problem(np.eye(2), np.ones(2))
            FiniteSplitting(p, [SplittingComponent(1, np.eye(2)[:, [0]], np.eye(1))])

    def test_spectral_route_matches_qp_oracle(self):
        # lam_min <= ||u||_a^2 / |||u|||^2 <= lam_max for every u
        rng = np.random.default_rng(5)
        A = random_spd(rng, 4)
        p = Problem(A, rng.standard_normal(4))
        eye = np.eye(4)
        comps = [
            SplittingComponent(1, eye[:, :3], A[:3, :3]),
            SplittingComponent(2, eye[:, 2:], A[2:, 2:]),
        ]
        splitting = FiniteSplitting(p, comps)
        sc = stability_constants(p, splitting)
        for _ in range(20):
            u = rng.standard_normal(4)
            ratio = energy_norm(p, u) ** 2 / representation_norm_sq(p, splitting, u)
            assert sc.lam_min - 1e-9 <= ratio <= sc.lam_max + 1e-9

    def test_qp_oracle_orthonormal_identity(self):
        model = DiagonalModel([1.0, -2.0, 0.5])
        problem, splitting = model.to_dense()
        u = np.array([0.3, 1.1, -0.7])
        assert representation_norm_sq(problem, splitting, u) == pytest.approx(
            float(u @ u), abs=1e-10
        )
