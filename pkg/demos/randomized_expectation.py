"""Expected error of randomized orderings versus the closed-form identity.

For the orthonormal diagonal model with pure relaxation, the expected squared
error after m random steps is exactly sum_i |c_i|^2 (1 - pi_i)^m.  This
script compares that identity against a seeded Monte Carlo estimate and an
exhaustive enumeration over all index sequences for small m, and checks the
O(1/m) expectation bound for the averaged relaxation.
"""

import numpy as np

from mschwarz import (
    ExplicitDistribution,
    GAWRRelaxation,
    PureRelaxation,
    RandomBoundSpec,
    RandomRule,
    ainfty_pi_norm,
    bruteforce_expected_error,
    exact_expected_error,
    make_diagonal,
    mc_expected_error,
    random_bound,
)


def main():
    pi = ExplicitDistribution([0.5, 0.4, 0.1])
    model = make_diagonal([0.6, 0.3, 0.1])
    rule = RandomRule(pi)

    print("pure relaxation: exact identity vs brute force vs Monte Carlo")
    est = mc_expected_error(model, rule, PureRelaxation(), 8, 20_000, master_seed=1)
    print(f"{'m':>2} {'exact':>12} {'bruteforce':>12} {'MC mean':>12} {'MC stderr':>10}")
    for m in range(9):
        exact = exact_expected_error(model, pi, m)
        brute = bruteforce_expected_error(model, pi, m)
        print(f"{m:>2} {exact:>12.6f} {brute:>12.6f} {est.mean[m]:>12.6f} "
              f"{est.stderr[m]:>10.1e}")

    print("\naveraged relaxation: MC mean against the expectation bound")
    M = 256
    est = mc_expected_error(model, rule, GAWRRelaxation(), M, 2000, master_seed=2)
    spec = RandomBoundSpec(
        norm_a=model.solution_norm(), lam=1.0, ainf=ainfty_pi_norm(model, pi)
    )
    bound = random_bound(np.arange(M + 1), spec)
    worst = (est.mean / bound).max()
    print(f"max ratio MC-mean / bound over m <= {M}: {worst:.3f} (must stay <= 1)")


if __name__ == "__main__":
    main()
