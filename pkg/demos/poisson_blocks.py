"""Overlapping-block splittings for the 1D Poisson problem.

Builds the finite-difference Poisson matrix with an overlapping block
splitting (optionally augmented by a coarse level), reports the stability
constants of the additive Schwarz operator, and compares cyclic, greedy and
randomized orderings of the multiplicative iteration.
"""

import numpy as np

from mschwarz import (
    FixedPool,
    GreedyRule,
    MatrixSchwarzModel,
    PureRelaxation,
    RandomRule,
    cyclic_rule,
    make_poisson_1d,
    run,
    stability_constants,
    uniform_bound_lambda,
    uniform_distribution,
)


def describe(problem, splitting, label):
    sc = stability_constants(problem, splitting)
    lam = uniform_bound_lambda(problem, splitting)
    print(f"{label}: {splitting.N} components, Lambda = {lam:.3f}, "
          f"lam_min = {sc.lam_min:.4f}, lam_max = {sc.lam_max:.3f}, "
          f"kappa = {sc.kappa:.2f}")


def main():
    n = 127
    spec = {"kind": "overlapping_blocks", "block_size": 16, "overlap": 4}
    problem, splitting = make_poisson_1d(n, spec)
    describe(problem, splitting, "one-level blocks")

    two_level = make_poisson_1d(
        n, {"kind": "two_level", "block_size": 16, "overlap": 4, "coarse_stride": 8}
    )
    describe(*two_level, "two-level blocks")

    model = MatrixSchwarzModel(problem, splitting)
    M = 4000
    rules = {
        "cyclic": cyclic_rule(splitting.N),
        "greedy": GreedyRule(1.0, FixedPool()),
        "random": RandomRule(uniform_distribution(splitting.N)),
    }
    print(f"\nerror reduction after {M} pure steps on n = {n}:")
    for name, rule in rules.items():
        trace = run(model, rule, PureRelaxation(), M, seed=0)
        print(f"  {name:<7} eps_M / eps_0 = {trace.error[-1] / trace.error[0]:.2e}")


if __name__ == "__main__":
    main()
