"""Convergence-bound evaluators, expectation oracles, and rate diagnostics.

Covers the a-priori squared-error bounds for greedy and randomized runs, the
exact expected-error identity of the orthonormal model with its brute-force
enumeration cross-check, seeded Monte Carlo estimation of the expected
squared error, Markov-Chebyshev tail bounds, log-log rate fitting, and the
worst-case simulation of the two-inequality recursion used in the density
convergence argument.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .diagonal import DiagonalModel
from .solver import GAWRRelaxation, PureRelaxation, RandomRule, run


# ---------------------------------------------------------------------------
# bound specifications and evaluators

@dataclass(frozen=True)
class GreedyBoundSpec:
    norm_a: float
    lam: float
    beta: float
    a1: float


@dataclass(frozen=True)
class RandomBoundSpec:
    norm_a: float
    lam: float
    ainf: float


@dataclass(frozen=True)
class GreedyDensityBoundSpec:
    dist_a: float       # ||u - h||_a
    norm_a: float       # ||u||_a
    lam: float
    beta: float
    a1_h: float         # ell^1 class norm of h


@dataclass(frozen=True)
class RandomDensityBoundSpec:
    dist_a: float
    norm_a: float
    lam: float
    ainf_h: float


def greedy_bound(m, spec):
    """Squared-error bound 2(||u||_a^2 + (Lam/beta)^2 ||u||_1^2) / (m+1)."""
    m = np.asarray(m, dtype=float)
    return 2.0 * (spec.norm_a ** 2 + (spec.lam / spec.beta) ** 2 * spec.a1 ** 2) / (m + 1.0)


def random_bound(m, spec):
    """Expected squared-error bound 2(||u||_a^2 + Lam^2 ||u||_pi^2) / (m+1)."""
    m = np.asarray(m, dtype=float)
    return 2.0 * (spec.norm_a ** 2 + spec.lam ** 2 * spec.ainf ** 2) / (m + 1.0)


def density_bound(m, spec):
    """Error bound 2||u-h||_a + sqrt(8(||u||_a^2 + C_h^2)) (m+1)^{-1/2}
    with C_h = (Lam/beta)||h||_1 (greedy) or Lam ||h||_pi (random)."""
    m = np.asarray(m, dtype=float)
    if isinstance(spec, GreedyDensityBoundSpec):
        csq = (spec.lam / spec.beta) ** 2 * spec.a1_h ** 2
    elif isinstance(spec, RandomDensityBoundSpec):
        csq = spec.lam ** 2 * spec.ainf_h ** 2
    else:
        raise TypeError(f"not a density bound spec: {spec!r}")
    return 2.0 * spec.dist_a + np.sqrt(8.0 * (spec.norm_a ** 2 + csq)) / np.sqrt(m + 1.0)


def chebyshev_tail(m, spec, eps=None, delta=None):
    """Markov-Chebyshev bounds for randomized runs.

    With ``eps``: lower bound on P(error^2 <= eps^2), clamped to [0, 1].
    With ``delta``: the squared-error threshold guaranteed with
    probability >= 1 - delta.
    """
    mbar8 = 8.0 * (spec.norm_a ** 2 + spec.lam ** 2 * spec.ainf ** 2)
    if (eps is None) == (delta is None):
        raise ValueError("pass exactly one of eps or delta")
    m = np.asarray(m, dtype=float)
    if eps is not None:
        if eps <= 0:
            raise ValueError("error threshold eps must be positive")
        return np.clip(1.0 - mbar8 / ((m + 1.0) * eps ** 2), 0.0, 1.0)
    if not 0.0 < delta <= 1.0:
        raise ValueError("confidence delta must lie in (0, 1]")
    return mbar8 / ((m + 1.0) * delta)


# ---------------------------------------------------------------------------
# exact expectation and its brute-force cross-check (orthonormal model, pure)

def exact_expected_error(model, pi, m):
    """E ||u - u^{(m)}||^2 = sum_i |c_i|^2 (1 - pi_i)^m for pure relaxation.

    Coefficients outside the support of pi are never hit and contribute
    |c_i|^2 at every m.  ``m`` may be a scalar or an array.
    """
    probs = np.array([pi.prob(int(i)) for i in model.support_indices])
    c_sq = model.coefficients ** 2
    m = np.asarray(m, dtype=float)
    vals = (c_sq[:, None] * (1.0 - probs[:, None]) ** m.reshape(1, -1)).sum(axis=0)
    return float(vals[0]) if m.ndim == 0 else vals.reshape(m.shape)


def bruteforce_expected_error(model, pi, m):
    """Exhaustive enumeration of all length-m index sequences.

    Each sequence is weighted by its sampling probability and the pure
    relaxation dynamics are replayed exactly: a visited coefficient is
    matched, everything else is untouched.  Limited to |support(pi)| <= 4 and
    m <= 8.
    """
    n = pi.support_bound()
    if n is None or n > 4:
        raise ValueError("brute force needs an explicit distribution on <= 4 indices")
    if m > 8:
        raise ValueError("brute force limited to m <= 8")
    c_sq = {int(i): float(v) ** 2 for i, v in zip(model.support_indices, model.coefficients)}
    total = 0.0
    for seq in itertools.product(range(1, n + 1), repeat=m):
        prob = 1.0
        for i in seq:
            prob *= pi.prob(i)
        visited = set(seq)
        err_sq = sum(v for i, v in c_sq.items() if i not in visited)
        total += prob * err_sq
    return total


# ---------------------------------------------------------------------------
# Monte Carlo estimation

@dataclass
class ExpectationEstimate:
    """Per-step sample mean and standard error of the squared energy error."""

    mean: np.ndarray
    stderr: np.ndarray
    trials: int


def _trial_seed(master_seed, trial):
    return np.random.SeedSequence([int(master_seed), int(trial)])


def mc_expected_error(model, selection, relaxation, steps, trials, master_seed):
    """Estimate E(error_m^2) over ``trials`` independently seeded runs.

    Trial t draws its RNG stream from (master_seed, t), so the estimate is
    deterministic in the master seed.  Diagonal-model randomized runs with
    pure or fixed-schedule relaxation take a vectorized path that replays the
    exact per-step dynamics; it is stream-identical to the generic loop.
    """
    if trials < 2:
        raise ValueError("need at least 2 trials for a standard error")
    if (
        isinstance(model, DiagonalModel)
        and isinstance(selection, RandomRule)
        and isinstance(relaxation, (PureRelaxation, GAWRRelaxation))
    ):
        return _mc_diagonal_fast(model, selection, relaxation, steps, trials, master_seed)
    sums = np.zeros(steps + 1)
    sumsq = np.zeros(steps + 1)
    for t in range(trials):
        trace = run(model, selection, relaxation, steps, seed=[int(master_seed), t])
        e2 = trace.error_sq
        sums += e2
        sumsq += e2 ** 2
    return _finalize_estimate(sums, sumsq, trials)


def _finalize_estimate(sums, sumsq, K):
    mean = sums / K
    second = sumsq / K
    var = np.maximum(second - mean ** 2, 0.0) * (K / (K - 1.0))
    # the streaming E[x^2] - E[x]^2 formula carries cancellation noise of
    # order eps * E[x^2]; anything below that is indistinguishable from zero
    var[var <= 64.0 * np.finfo(float).eps * second] = 0.0
    return ExpectationEstimate(mean=mean, stderr=np.sqrt(var / K), trials=K)


def _mc_diagonal_fast(model, selection, relaxation, M, K, master_seed, chunk=4096):
    c = model.coefficients
    d = c.size
    top = int(model.support_indices.max()) if d else 1
    lookup_cache = {}

    def lookup(dist):
        key = id(dist)
        if key not in lookup_cache:
            table = np.full(top + 2, -1, dtype=np.int64)
            table[model.support_indices] = np.arange(d)
            lookup_cache[key] = table
        return lookup_cache[key]

    fixed = not callable(selection.schedule)
    dists = None if fixed else [selection.distribution(m) for m in range(M)]
    fixed_dist = selection.distribution(0) if fixed else None
    pure = isinstance(relaxation, PureRelaxation)
    alphas = np.array([relaxation.alpha(m) for m in range(M)])

    sums = np.zeros(M + 1)
    sumsq = np.zeros(M + 1)
    support_table = np.full(top + 2, -1, dtype=np.int64)
    support_table[model.support_indices] = np.arange(d)

    for start in range(0, K, chunk):
        B = min(chunk, K - start)
        U = np.empty((B, M))
        for t in range(B):
            rng = np.random.default_rng(_trial_seed(master_seed, start + t))
            U[t] = rng.random(M)
        # map uniforms to support positions per step (-1: no support coefficient)
        pos = np.empty((B, M), dtype=np.int64)
        if fixed:
            idx = fixed_dist.sample_from_uniform(U)
            pos[:] = np.where(idx <= top, support_table[np.minimum(idx, top)], -1)
        else:
            for m in range(M):
                idx = dists[m].sample_from_uniform(U[:, m])
                pos[:, m] = np.where(idx <= top, support_table[np.minimum(idx, top)], -1)
        state = np.zeros((B, d))
        errs = np.empty((B, M + 1))
        rows = np.arange(B)
        for m in range(M):
            errs[:, m] = ((c - state) ** 2).sum(axis=1)
            hit = pos[:, m] >= 0
            rows_h = rows[hit]
            cols_h = pos[hit, m]
            # residual at u^{(m)}: below the zero threshold the direction is
            # dropped (omega = 0) and the coordinate only scales with alpha
            live = np.abs(c[cols_h] - state[rows_h, cols_h]) > model.zero_tol
            if not pure:
                state *= alphas[m]
            state[rows_h[live], cols_h[live]] = c[cols_h[live]]
        errs[:, M] = ((c - state) ** 2).sum(axis=1)
        sums += errs.sum(axis=0)
        sumsq += (errs ** 2).sum(axis=0)
    return _finalize_estimate(sums, sumsq, K)


# ---------------------------------------------------------------------------
# the sharp expectation chain for c_i proportional to pi_i

def pcons_sum(pi_probs, m):
    """sum_i pi_i^2 (1 - pi_i)^m over an explicit probability vector."""
    p = np.asarray(pi_probs, dtype=float)
    m = np.asarray(m, dtype=float)
    vals = (p[:, None] ** 2 * (1.0 - p[:, None]) ** m.reshape(1, -1)).sum(axis=0)
    return float(vals[0]) if m.ndim == 0 else vals.reshape(m.shape)


def pcons_envelope_constant(m):
    """c(m) = max_{t in [0,1]} t^2 (1-t)^m (m+1)^2; the maximizer is
    t = 2/(m+2)."""
    t = min(2.0 / (m + 2.0), 1.0)
    return t ** 2 * (1.0 - t) ** m * (m + 1.0) ** 2


# ---------------------------------------------------------------------------
# rate fitting

@dataclass
class RateFit:
    slope: float
    intercept: float
    residual: float
    converged_exactly: bool = False


def fit_rate(errors, m_range=None):
    """Least-squares fit of log(error_m) against log(m+1).

    ``m_range`` is an inclusive (lo, hi) window; the default is the upper
    decade [M/10, M].  Exact zeros in the window are reported as converged
    instead of fitted.
    """
    errors = np.asarray(errors, dtype=float)
    M = errors.size - 1
    if m_range is None:
        m_range = (M // 10, M)
    lo, hi = int(m_range[0]), int(m_range[1])
    ms = np.arange(max(lo, 0), min(hi, M) + 1)
    if ms.size < 3:
        raise ValueError("rate fit needs at least 3 points")
    y = errors[ms]
    if np.any(y <= 0.0):
        return RateFit(slope=float("nan"), intercept=float("nan"),
                       residual=0.0, converged_exactly=True)
    x = np.log(ms + 1.0)
    logy = np.log(y)
    slope, intercept = np.polyfit(x, logy, 1)
    resid = float(np.sqrt(np.mean((logy - (slope * x + intercept)) ** 2)))
    return RateFit(slope=float(slope), intercept=float(intercept), residual=resid)


# ---------------------------------------------------------------------------
# recursion checker

@dataclass
class Lemma3Result:
    applicable: bool
    passed: bool
    max_b: float


def lemma3_check(B, A=None, steps=100_000, b0=None):
    """Simulate the pointwise-maximal sequence admitted by the recursion

        b_{m+1} <= sqrt(alpha_m) b_m + B (m+2)^{-1/2}
        b_{m+1} <= sqrt(alpha_m) (b_m + 1/((m+1) b_m))   (when b_m > 0)

    with alpha_m = (m+1)/(m+2), and report whether it stays below A.  The
    maximal sequence dominates every admissible one, so a pass certifies the
    bound for all of them.
    """
    if B <= 0:
        raise ValueError("B must be positive")
    if A is None:
        A = B / math.sqrt(2.0) + math.sqrt(2.0)
    b = B if b0 is None else float(b0)
    if b > A:
        return Lemma3Result(applicable=False, passed=False, max_b=b)
    worst = b
    for m in range(steps):
        root = math.sqrt((m + 1.0) / (m + 2.0))
        nxt = root * b + B / math.sqrt(m + 2.0)
        if b > 0.0:
            nxt = min(nxt, root * (b + 1.0 / ((m + 1.0) * b)))
        b = nxt
        if b > worst:
            worst = b
    return Lemma3Result(applicable=True, passed=worst <= A, max_b=worst)


def lemma3_sweep(Bs, steps=100_000):
    """Vectorized worst-case simulation for a batch of B values with the
    default A = B/sqrt(2) + sqrt(2); returns the per-B maxima."""
    b = np.asarray(Bs, dtype=float).copy()
    if np.any(b <= 0):
        raise ValueError("all B must be positive")
    B = b.copy()
    worst = b.copy()
    for m in range(steps):
        root = math.sqrt((m + 1.0) / (m + 2.0))
        e2 = root * b + B / math.sqrt(m + 2.0)
        e1 = np.where(b > 0.0, root * (b + 1.0 / ((m + 1.0) * np.maximum(b, 1e-300))), np.inf)
        b = np.minimum(e2, e1)
        worst = np.maximum(worst, b)
    return worst
