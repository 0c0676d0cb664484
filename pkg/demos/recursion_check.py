"""Worst-case simulation of the two-inequality error recursion.

The O(m^{-1/2}) density convergence argument rests on showing that any
sequence obeying

    b_{m+1} <= sqrt(alpha_m) b_m + B (m+2)^{-1/2}
    b_{m+1} <= sqrt(alpha_m) (b_m + 1/((m+1) b_m))

with alpha_m = (m+1)/(m+2) stays below A = B/sqrt(2) + sqrt(2).  The checker
simulates the pointwise-maximal admissible sequence, which dominates all
others, so one simulation certifies the bound.
"""

import math

import numpy as np

from mschwarz import lemma3_check, lemma3_sweep


def main():
    B = 1.0 / math.sqrt(2.0)
    res = lemma3_check(B, A=2.0, steps=100_000)
    print(f"B = 1/sqrt(2), A = 2: max b_m = {res.max_b:.6f} "
          f"-> {'pass' if res.passed else 'FAIL'}")

    bad = lemma3_check(B, A=2.0, b0=5.0)
    print(f"starting above A: applicable = {bad.applicable} (precondition violated)")

    Bs = np.linspace(0.01, B, 50)
    worst = lemma3_sweep(Bs, steps=50_000)
    limits = Bs / math.sqrt(2.0) + math.sqrt(2.0)
    print(f"sweep of {len(Bs)} values B in (0, 1/sqrt(2)]: "
          f"max slack used = {(worst / limits).max():.4f} of the allowed A "
          f"-> {'all pass' if np.all(worst <= limits) else 'FAIL'}")


if __name__ == "__main__":
    main()
