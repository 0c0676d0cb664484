"""Discrete probability distributions over the natural numbers (1-based).

Explicit finite vectors, the power-law family pi_i = c_s i^{-(1+s)}, the
slowly decaying family pi_i = c / (i log^2(i+1)), and step-dependent
truncations of any of them.  Sampling uses inverse-CDF lookup over partial
sums; analytic families extend their tables on demand.
"""

import math

import numpy as np
from scipy.special import zeta

_NORMALIZATION_TOL = 1e-12


class ExplicitDistribution:
    """A finite distribution on indices 1..n."""

    def __init__(self, probs):
        p = np.asarray(probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probability vector must be a nonempty 1-d array")
        if np.any(p < 0.0):
            raise ValueError("probabilities must be nonnegative")
        total = float(p.sum())
        if abs(total - 1.0) > _NORMALIZATION_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        self.probs = p
        self.n = p.size
        self._cum = np.cumsum(p)

    def prob(self, i):
        return float(self.probs[i - 1]) if 1 <= i <= self.n else 0.0

    def sample(self, rng, size=None):
        idx = self.sample_from_uniform(np.atleast_1d(rng.random(size)))
        return int(idx[0]) if size is None else idx

    def sample_from_uniform(self, u):
        pos = np.searchsorted(self._cum, u, side="right")
        return np.minimum(pos, self.n - 1).astype(np.int64) + 1

    def head_mass(self, N):
        if N <= 0:
            return 0.0
        if N >= self.n:
            return 1.0  # the full support carries the whole mass by definition
        return float(self._cum[N - 1])

    def tail_mass(self, N):
        return max(1.0 - self.head_mass(N), 0.0)

    def support_bound(self):
        return self.n


def uniform_distribution(n):
    """The uniform distribution on {1, ..., n}."""
    return ExplicitDistribution(np.full(n, 1.0 / n))


class _SeriesDistribution:
    """Base for analytic families: pi_i = Z^{-1} term(i) with known Z.

    Subclasses provide ``_terms`` (vectorized) and the constant ``Z``; partial
    sums are tabulated lazily and grown on demand for sampling.
    """

    _table_start = 64
    _table_limit = 50_000_000

    def __init__(self):
        self._cum = np.cumsum(self._terms(np.arange(1, self._table_start + 1))) / self.Z

    def _extend_to(self, N):
        n = self._cum.size
        if N <= n:
            return
        if N > self._table_limit:
            raise ValueError(f"partial-sum table would exceed {self._table_limit} entries")
        new = self._terms(np.arange(n + 1, N + 1)) / self.Z
        self._cum = np.concatenate([self._cum, self._cum[-1] + np.cumsum(new)])

    def prob(self, i):
        if i < 1:
            return 0.0
        return float(self._terms(np.array([i], dtype=float))[0] / self.Z)

    def head_mass(self, N):
        if N <= 0:
            return 0.0
        self._extend_to(N)
        return float(self._cum[N - 1])

    def tail_mass(self, N):
        return max(1.0 - self.head_mass(N), 0.0)

    def support_bound(self):
        return None

    def sample(self, rng, size=None):
        idx = self.sample_from_uniform(np.atleast_1d(rng.random(size)))
        return int(idx[0]) if size is None else idx

    def sample_from_uniform(self, u):
        u = np.atleast_1d(u)
        top = float(u.max())
        while self._cum[-1] <= top:
            self._extend_to(2 * self._cum.size)
        return np.searchsorted(self._cum, u, side="right").astype(np.int64) + 1


class PowerLawDistribution(_SeriesDistribution):
    """pi_i = c_s i^{-(1+s)} with c_s = 1/zeta(1+s), s > 0."""

    def __init__(self, s):
        if s <= 0:
            raise ValueError(f"power-law exponent s={s} must be positive")
        self.s = float(s)
        self.Z = float(zeta(1.0 + s))
        super().__init__()

    def _terms(self, i):
        return np.asarray(i, dtype=float) ** (-(1.0 + self.s))


def _log_family_constant():
    """Z = sum_i 1/(i log^2(i+1)) by direct summation plus an
    Euler-Maclaurin tail.

    The tail integral is split as 1/(x log^2(x+1)) =
    1/((x+1) log^2(x+1)) + 1/(x(x+1) log^2(x+1)); the first part has the
    exact antiderivative -1/log(x+1) and the remainder decays like x^{-2},
    which numerical quadrature handles reliably (direct quadrature of the
    full integrand over [N, inf) silently loses several digits).
    """
    import mpmath as mp

    N = 1_000_000
    i = np.arange(1, N + 1, dtype=float)
    head = float(np.sum(np.sort(1.0 / (i * np.log(i + 1.0) ** 2))))
    with mp.workdps(40):
        a = mp.mpf(N + 1)
        f = lambda x: 1 / (x * mp.log(x + 1) ** 2)
        integral = 1 / mp.log(a + 1) + mp.quad(
            lambda x: 1 / (x * (x + 1) * mp.log(x + 1) ** 2),
            [a, 10 * a, 1000 * a, mp.inf],
        )
        tail = integral + f(a) / 2 - mp.diff(f, a) / 12
    return head + float(tail)


class LogFamilyDistribution(_SeriesDistribution):
    """pi_i = c / (i log^2(i+1)); heavy-tailed, in every ell^1 neighborhood."""

    _Z_cache = None

    def __init__(self):
        if LogFamilyDistribution._Z_cache is None:
            LogFamilyDistribution._Z_cache = _log_family_constant()
        self.Z = LogFamilyDistribution._Z_cache
        super().__init__()

    def _terms(self, i):
        i = np.asarray(i, dtype=float)
        return 1.0 / (i * np.log(i + 1.0) ** 2)

    _sample_table_cap = 1 << 20

    def sample_from_uniform(self, u):
        """Inverse-CDF sampling with an asymptotic far-tail branch.

        The quantile of u grows like exp(1/(Z(1-u))), so exact table
        inversion is infeasible near u = 1; beyond the table the index is
        taken from the asymptotic tail law tail(N) ~ 1/(Z log N), saturating
        at the largest representable integer.  The approximation only affects
        draws in the extreme tail (far outside any finite support).
        """
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if self._cum.size < self._sample_table_cap:
            self._extend_to(self._sample_table_cap)
        out = np.searchsorted(self._cum, u, side="right").astype(np.int64) + 1
        beyond = u >= self._cum[-1]
        if np.any(beyond):
            expo = np.minimum(
                1.0 / (self.Z * np.maximum(1.0 - u[beyond], 1e-300)), 43.0
            )
            far = np.exp(expo)
            far = np.minimum(far, float(np.iinfo(np.int64).max // 2))
            out[beyond] = np.maximum(far.astype(np.int64), self._cum.size + 1)
        return out


def truncate_distribution(base, m, D):
    """Truncate-and-renormalize ``base`` to the smallest head {1..N_m} with
    ||pi^{(m)} - pi||_1 <= D (m+2)^{-1/2}.

    The ell^1 distance of the construction equals exactly twice the tail mass
    of the base distribution beyond the cutoff.
    """
    if D <= 0:
        raise ValueError("truncation budget D must be positive")
    budget = 0.5 * D / math.sqrt(m + 2)
    bound = base.support_bound()
    # find the smallest N with tail(N) <= budget by doubling + bisection
    hi = 1
    while base.tail_mass(hi) > budget:
        if bound is not None and hi >= bound:
            break
        hi *= 2
    lo = hi // 2
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if base.tail_mass(mid) <= budget:
            hi = mid
        else:
            lo = mid
    N = hi if bound is None else min(hi, bound)
    probs = np.array([base.prob(i) for i in range(1, N + 1)])
    head = probs.sum()
    return ExplicitDistribution(probs / head)


class TruncatedSchedule:
    """Step-dependent schedule m -> truncated version of a base distribution.

    Caches the per-step truncations and exposes the exact ell^1 deviation for
    verification against the D (m+2)^{-1/2} budget.
    """

    def __init__(self, base, D):
        self.base = base
        self.D = float(D)
        self._cache = {}

    def __call__(self, m):
        if m not in self._cache:
            self._cache[m] = truncate_distribution(self.base, m, self.D)
        return self._cache[m]

    def l1_error(self, m):
        dist = self(m)
        return 2.0 * self.base.tail_mass(dist.n)
