import math

import numpy as np
import pytest

from mschwarz import (
    DiagonalModel,
    ExplicitDistribution,
    MatrixSchwarzModel,
    PureRelaxation,
    RandomRule,
    a1_norm,
    ainfty_pi_norm,
    make_diagonal,
    run,
    uniform_bound_lambda,
    uniform_distribution,
)


class TestModelBasics:
    def test_single_coefficient(self):
        model = make_diagonal({1: 1.0})
        assert model.solution_norm() == 1.0
        assert model.uniform_bound == 1.0

    def test_sparse_indices(self):
        model = make_diagonal({3: 0.5, 10: -0.2})
        assert list(model.support_indices) == [3, 10]
        res = model.local_residual(model.new_state(), 10)
        assert res.r == pytest.approx(-0.2)

    def test_off_support_residual_is_zero(self):
        model = make_diagonal({2: 1.0})
        res = model.local_residual(model.new_state(), 7)
        assert res.r == 0.0 and res.local_norm == 0.0

    def test_rejects_nonpositive_indices(self):
        with pytest.raises(ValueError):
            make_diagonal({0: 1.0})

    def test_dense_embedding_uniform_bound(self):
        problem, splitting = make_diagonal({1: 1.0}).to_dense()
        assert uniform_bound_lambda(problem, splitting) == pytest.approx(1.0, abs=1e-12)


class TestDenseLazyEquivalence:
    def test_operations_agree_on_random_state(self):
        model = DiagonalModel([0.9, -0.4, 0.3, 0.0, 0.2])
        problem, splitting = model.to_dense()
        dense = MatrixSchwarzModel(problem, splitting)
        rng = np.random.default_rng(17)
        lazy_state = model.new_state()
        dense_state = dense.new_state()
        u = rng.standard_normal(5)
        lazy_state.u = u.copy()
        dense_state.u = u.copy()
        dense_state.w = problem.A @ u
        for i in range(1, 6):
            lr = model.local_residual(lazy_state, i)
            dr = dense.local_residual(dense_state, i)
            assert lr.r == pytest.approx(dr.r[0], abs=1e-13)
            assert model.dir_functional(i, lr.r) == pytest.approx(
                dense.dir_functional(i, dr.r), abs=1e-13
            )
            assert model.dir_inner_current(lazy_state, i, lr.r) == pytest.approx(
                dense.dir_inner_current(dense_state, i, dr.r), abs=1e-13
            )
        assert model.current_energy_sq(lazy_state) == pytest.approx(
            dense.current_energy_sq(dense_state), abs=1e-12
        )
        assert model.error(lazy_state) == pytest.approx(dense.error(dense_state), abs=1e-12)

    def test_random_run_traces_agree(self):
        model = DiagonalModel([0.6, 0.3, 0.1])
        problem, splitting = model.to_dense()
        dense = MatrixSchwarzModel(problem, splitting)
        rule = RandomRule(uniform_distribution(3))
        for relax in (PureRelaxation(),):
            lazy = run(model, rule, relax, 50, seed=5)
            ref = run(dense, rule, relax, 50, seed=5)
            assert np.array_equal(lazy.index, ref.index)
            assert np.abs(lazy.error - ref.error).max() < 1e-10


class TestPureRandomHitSets:
    def test_iterate_equals_partial_sum_over_hit_set(self):
        # pure relaxation writes the exact coefficient of every visited index
        model = DiagonalModel([0.5, -0.3, 0.2, 0.1])
        rule = RandomRule(uniform_distribution(4))
        trace = run(model, rule, PureRelaxation(), 30, seed=9)
        hit = set()
        c = model.coefficients
        for m in range(30):
            hit.add(int(trace.index[m]))
            expected_sq = sum(c[i - 1] ** 2 for i in range(1, 5) if i not in hit)
            assert trace.error_sq[m + 1] == pytest.approx(expected_sq, abs=1e-14)


class TestClassNorms:
    def test_a1_single(self):
        assert a1_norm(make_diagonal({1: 1.0})) == 1.0

    def test_a1_direct_sum(self):
        assert a1_norm(make_diagonal([1.0, 0.5, 0.25])) == pytest.approx(1.75, abs=1e-15)

    def test_a1_dominates_energy_norm(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            model = make_diagonal(rng.standard_normal(6))
            assert model.solution_norm() <= a1_norm(model) + 1e-12

    def test_ainfty_extremal_case(self):
        pi = ExplicitDistribution([0.5, 0.3, 0.2])
        model = make_diagonal([0.5, 0.3, 0.2])
        assert ainfty_pi_norm(model, pi) == pytest.approx(1.0, abs=1e-15)

    def test_ainfty_componentwise_max(self):
        pi = ExplicitDistribution([0.5, 0.5])
        model = make_diagonal([1.0, 0.5])
        assert ainfty_pi_norm(model, pi) == pytest.approx(2.0, abs=1e-15)

    def test_ainfty_homogeneity(self):
        pi = ExplicitDistribution([0.25, 0.75])
        base = ainfty_pi_norm(make_diagonal([0.4, 0.3]), pi)
        scaled = ainfty_pi_norm(make_diagonal([-1.2, -0.9]), pi)
        assert scaled == pytest.approx(3.0 * base, abs=1e-13)

    def test_ainfty_infinite_off_support(self):
        pi = ExplicitDistribution([1.0])
        model = make_diagonal({2: 0.1})
        assert ainfty_pi_norm(model, pi) == math.inf
