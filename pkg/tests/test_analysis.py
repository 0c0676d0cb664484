import math

import numpy as np
import pytest

from mschwarz import (
    DiagonalModel,
    ExplicitDistribution,
    GAWRRelaxation,
    GreedyBoundSpec,
    PureRelaxation,
    RandomBoundSpec,
    GreedyDensityBoundSpec,
    RandomRule,
    bruteforce_expected_error,
    chebyshev_tail,
    density_bound,
    exact_expected_error,
    fit_rate,
    greedy_bound,
    lemma3_check,
    lemma3_sweep,
    make_diagonal,
    mc_expected_error,
    pcons_envelope_constant,
    pcons_sum,
    random_bound,
    run,
    uniform_distribution,
)
from mschwarz.solver import DeterministicRule


class TestBoundEvaluators:
    def test_greedy_bound_unit_case(self):
        spec = GreedyBoundSpec(norm_a=1.0, lam=1.0, beta=1.0, a1=1.0)
        assert greedy_bound(0, spec) == pytest.approx(4.0, abs=1e-15)

    def test_greedy_bound_quarters(self):
        spec = GreedyBoundSpec(norm_a=0.7, lam=1.3, beta=0.5, a1=2.0)
        for m in [0, 3, 10, 99]:
            assert greedy_bound(4 * m + 3, spec) == pytest.approx(
                greedy_bound(m, spec) / 4.0, rel=1e-14
            )

    def test_greedy_bound_beta_gap(self):
        lam, a1, na = 1.1, 0.8, 0.5
        half = GreedyBoundSpec(norm_a=na, lam=lam, beta=0.5, a1=a1)
        full = GreedyBoundSpec(norm_a=na, lam=lam, beta=1.0, a1=a1)
        m = 7.0
        gap = greedy_bound(m, half) - greedy_bound(m, full)
        assert gap == pytest.approx(2.0 * 3.0 * lam ** 2 * a1 ** 2 / (m + 1.0), rel=1e-13)

    def test_random_bound_unit_case(self):
        spec = RandomBoundSpec(norm_a=1.0, lam=1.0, ainf=1.0)
        assert random_bound(1, spec) == pytest.approx(2.0, abs=1e-15)

    def test_random_bound_zero_norms(self):
        spec = RandomBoundSpec(norm_a=0.0, lam=1.0, ainf=0.0)
        assert random_bound(5, spec) == 0.0

    def test_random_bound_dominates_exact_expectation(self):
        pi = uniform_distribution(8)
        model = make_diagonal(np.full(8, 0.125))
        spec = RandomBoundSpec(norm_a=model.solution_norm(), lam=1.0, ainf=1.0)
        ms = np.arange(1001)
        exact = exact_expected_error(model, pi, ms)
        assert np.all(exact <= random_bound(ms, spec) + 1e-15)

    def test_density_bound_limits(self):
        # h = u: reduces to the pure sqrt(8 ...) (m+1)^{-1/2} term
        spec = GreedyDensityBoundSpec(dist_a=0.0, norm_a=1.0, lam=1.0, beta=1.0, a1_h=1.0)
        assert density_bound(0, spec) == pytest.approx(4.0, abs=1e-14)
        # all class norms zero: only the distance term remains
        far = GreedyDensityBoundSpec(dist_a=1.0, norm_a=0.0, lam=1.0, beta=1.0, a1_h=0.0)
        assert density_bound(0, far) == pytest.approx(2.0, abs=1e-15)


class TestExactExpectation:
    def test_m0_is_squared_norm(self):
        model = make_diagonal([0.6, 0.3, 0.1])
        pi = ExplicitDistribution([0.2, 0.3, 0.5])
        assert exact_expected_error(model, pi, 0) == pytest.approx(
            model.solution_norm() ** 2, abs=1e-15
        )

    def test_single_coefficient_hand_value(self):
        model = make_diagonal({1: 1.0})
        pi = ExplicitDistribution([0.5, 0.5])
        assert exact_expected_error(model, pi, 3) == pytest.approx(0.125, abs=1e-15)

    def test_off_support_mass_never_decays(self):
        model = make_diagonal({1: 0.5, 9: 0.5})
        pi = ExplicitDistribution([1.0])
        assert exact_expected_error(model, pi, 100) == pytest.approx(0.25, abs=1e-15)


class TestBruteForce:
    def test_two_sequences_hand_value(self):
        model = make_diagonal([1.0, 1.0])
        pi = ExplicitDistribution([0.5, 0.5])
        assert bruteforce_expected_error(model, pi, 1) == pytest.approx(1.0, abs=1e-15)

    def test_matches_exact_identity_on_grids(self):
        rng = np.random.default_rng(13)
        for _ in range(5):
            c = rng.standard_normal(3)
            p = rng.random(3) + 0.05
            p /= p.sum()
            model = make_diagonal(c)
            pi = ExplicitDistribution(p)
            for m in range(9):
                assert bruteforce_expected_error(model, pi, m) == pytest.approx(
                    exact_expected_error(model, pi, m), abs=1e-12
                )

    def test_size_limits(self):
        model = make_diagonal(np.ones(5) / 5)
        pi = uniform_distribution(5)
        with pytest.raises(ValueError):
            bruteforce_expected_error(model, pi, 2)
        with pytest.raises(ValueError):
            bruteforce_expected_error(make_diagonal([1.0]), uniform_distribution(2), 9)


class TestMonteCarlo:
    def test_deterministic_rule_has_zero_stderr(self):
        model = make_diagonal([0.5, 0.3])
        est = mc_expected_error(model, DeterministicRule([1, 2]), PureRelaxation(), 8, 5, 0)
        assert np.all(est.stderr == 0.0)

    def test_fast_path_matches_generic_loop(self):
        model = make_diagonal([0.5, -0.3, 0.2])
        rule = RandomRule(uniform_distribution(3))
        for relax in (PureRelaxation(), GAWRRelaxation()):
            fast = mc_expected_error(model, rule, relax, 24, 40, 99)
            sums = np.zeros(25)
            sumsq = np.zeros(25)
            for t in range(40):
                trace = run(model, rule, relax, 24, seed=[99, t])
                sums += trace.error_sq
                sumsq += trace.error_sq ** 2
            mean = sums / 40
            assert np.abs(fast.mean - mean).max() < 1e-13

    def test_mean_close_to_exact(self):
        model = make_diagonal([0.6, 0.3, 0.1])
        pi = ExplicitDistribution([0.5, 0.4, 0.1])
        est = mc_expected_error(model, RandomRule(pi), PureRelaxation(), 5, 20_000, 4)
        exact = exact_expected_error(model, pi, np.arange(6))
        dev = np.abs(est.mean - exact)
        assert np.all(dev[1:] <= 4.0 * est.stderr[1:])

    def test_stderr_scales_like_inverse_sqrt_k(self):
        model = make_diagonal([0.6, 0.3, 0.1])
        rule = RandomRule(uniform_distribution(3))
        small = mc_expected_error(model, rule, PureRelaxation(), 8, 2000, 7)
        large = mc_expected_error(model, rule, PureRelaxation(), 8, 8000, 7)
        ratio = small.stderr[4] / large.stderr[4]
        assert 2.0 * 0.8 <= ratio <= 2.0 * 1.2

    def test_requires_two_trials(self):
        model = make_diagonal([1.0])
        with pytest.raises(ValueError):
            mc_expected_error(model, RandomRule(uniform_distribution(1)),
                              PureRelaxation(), 2, 1, 0)


class TestChebyshev:
    def test_large_eps_clamps_to_one(self):
        spec = RandomBoundSpec(norm_a=1.0, lam=1.0, ainf=1.0)
        assert chebyshev_tail(10, spec, eps=1e6) == pytest.approx(1.0)

    def test_hand_value(self):
        # 8(norm^2 + lam^2 ainf^2) = 8, m = 7, eps^2 = 2 -> 1 - 8/(8*2) = 1/2
        spec = RandomBoundSpec(norm_a=1.0, lam=1.0, ainf=0.0)
        assert chebyshev_tail(7, spec, eps=math.sqrt(2.0)) == pytest.approx(0.5, abs=1e-14)

    def test_delta_mode_threshold(self):
        spec = RandomBoundSpec(norm_a=1.0, lam=1.0, ainf=0.0)
        thr = chebyshev_tail(7, spec, delta=0.5)
        assert thr == pytest.approx(2.0, abs=1e-14)

    def test_empirical_violation_rate(self):
        # observed violation frequency never exceeds the Chebyshev tail
        # probability plus a 3-sigma binomial slack
        c = np.full(4, 0.25)
        model = make_diagonal(c)
        spec = RandomBoundSpec(norm_a=model.solution_norm(), lam=1.0, ainf=1.0)
        K, m_probe = 10_000, 32
        eps = math.sqrt(0.05)
        rng = np.random.default_rng(31)
        # pure relaxation on the diagonal model: err^2 after m steps is the
        # squared mass of the coefficients never selected (hit-set dynamics)
        picks = rng.integers(0, 4, size=(K, m_probe))
        hit = np.zeros((K, 4), dtype=bool)
        for j in range(4):
            hit[:, j] = (picks == j).any(axis=1)
        err_sq = ((~hit) * c ** 2).sum(axis=1)
        violations = np.mean(err_sq > eps ** 2)
        p_allowed = 1.0 - chebyshev_tail(m_probe, spec, eps=eps)
        slack = 3.0 * math.sqrt(max(p_allowed * (1 - p_allowed), 1e-4) / K)
        assert violations <= p_allowed + slack

    def test_argument_validation(self):
        spec = RandomBoundSpec(norm_a=1.0, lam=1.0, ainf=1.0)
        with pytest.raises(ValueError):
            chebyshev_tail(1, spec)
        with pytest.raises(ValueError):
            chebyshev_tail(1, spec, eps=1.0, delta=0.5)


class TestPcons:
    def test_extremal_equality(self):
        p = np.array([0.5, 0.3, 0.2])
        pi = ExplicitDistribution(p)
        C = 2.0
        model = make_diagonal(C * p)
        ms = np.arange(200)
        lhs = exact_expected_error(model, pi, ms)
        rhs = C ** 2 * pcons_sum(p, ms)
        assert np.abs(lhs - rhs).max() < 1e-14

    def test_envelope_constant_maximizer(self):
        for m in [0, 1, 5, 33, 1000]:
            c = pcons_envelope_constant(m)
            ts = np.linspace(0.0, 1.0, 20001)
            grid = (ts ** 2 * (1.0 - ts) ** m * (m + 1.0) ** 2).max()
            assert c >= grid - 1e-9


class TestRateFit:
    def test_exact_half_power(self):
        m = np.arange(101)
        fit = fit_rate((m + 1.0) ** -0.5)
        assert fit.slope == pytest.approx(-0.5, abs=1e-12)

    def test_scaled_inverse_power(self):
        m = np.arange(101)
        fit = fit_rate(3.0 * (m + 1.0) ** -1.0)
        assert fit.slope == pytest.approx(-1.0, abs=1e-12)
        assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-12)

    def test_exact_convergence_flagged(self):
        errors = np.concatenate([np.geomspace(1.0, 1e-3, 50), np.zeros(51)])
        fit = fit_rate(errors)
        assert fit.converged_exactly

    def test_needs_three_points(self):
        with pytest.raises(ValueError):
            fit_rate(np.ones(5), m_range=(0, 1))


class TestLemma3:
    def test_reference_constants(self):
        res = lemma3_check(1.0 / math.sqrt(2.0), A=2.0, steps=100_000)
        assert res.applicable and res.passed
        assert res.max_b <= 2.0

    def test_initial_value_above_a_not_applicable(self):
        res = lemma3_check(0.5, A=1.0, b0=5.0)
        assert not res.applicable

    def test_sweep_passes_for_small_b(self):
        rng = np.random.default_rng(2)
        Bs = rng.uniform(1e-3, 1.0 / math.sqrt(2.0), size=20)
        worst = lemma3_sweep(Bs, steps=20_000)
        assert np.all(worst <= Bs / math.sqrt(2.0) + math.sqrt(2.0))
