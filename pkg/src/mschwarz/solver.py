"""The multiplicative Schwarz iteration with relaxation.

One step picks a component (deterministically, greedily, or at random),
solves its local subproblem for the partial residual r_i, and updates

    u^{(m+1)} = alpha_m u^{(m)} + omega_m R_i r_i,

with alpha_m from the relaxation rule and omega_m minimizing the energy
error along the chosen direction.
"""

import time
from dataclasses import dataclass, field

import numpy as np


# ---------------------------------------------------------------------------
# pool policies for greedy selection

class FixedPool:
    """All components of a finite splitting, at every step."""

    def indices(self, model, state, m):
        return model.default_pool_indices()


class GrowingPool:
    """Nested finite pools I_m given by a nondecreasing size schedule."""

    def __init__(self, size_fn=None):
        self.size_fn = size_fn or (lambda m: m + 1)
        self._last = 0

    def indices(self, model, state, m):
        n = model.component_count()
        if n is None:
            raise ValueError("growing pools need a finite splitting")
        size = min(int(self.size_fn(m)), n)
        if size < min(self._last, n):
            raise ValueError("growing pool schedule must be nondecreasing")
        self._last = size
        return model.default_pool_indices()[: max(size, 1)]


class SupportPool:
    """Support of the target coefficients; diagonal model only.

    Off-support residual coefficients vanish, so the finite scan realizes the
    exact supremum over the whole countable index set.
    """

    def indices(self, model, state, m):
        indices = getattr(model, "support_indices", None)
        if indices is None:
            raise ValueError("support pools are only available on the diagonal model")
        return indices


# ---------------------------------------------------------------------------
# selection rules

class DeterministicRule:
    """A fixed index sequence: a callable m -> index or a list cycled over."""

    def __init__(self, sequence):
        if callable(sequence):
            self._fn = sequence
        else:
            seq = [int(i) for i in sequence]
            if not seq:
                raise ValueError("empty index sequence")
            self._fn = lambda m: seq[m % len(seq)]

    def index(self, m):
        return self._fn(m)


def cyclic_rule(n_components):
    """The classical cyclic sweep 1, 2, ..., N, 1, ... (indices are 1-based)."""
    return DeterministicRule(lambda m: m % n_components + 1)


class GreedyRule:
    """Weak greedy pick: local norm within a factor beta of the pool maximum."""

    def __init__(self, beta=1.0, pool=None):
        if not 0.0 < beta <= 1.0:
            raise ValueError(f"weakness parameter beta={beta} outside (0, 1]")
        self.beta = beta
        self.pool = pool if pool is not None else FixedPool()


class RandomRule:
    """Random pick from a distribution schedule (fixed or step-dependent)."""

    def __init__(self, schedule):
        self.schedule = schedule

    def distribution(self, m):
        if callable(self.schedule):
            return self.schedule(m)
        return self.schedule


def select_greedy(model, state, rule, m):
    """Pick an index satisfying the weak greedy criterion over the pool.

    Returns the smallest pool index whose squared local norm reaches
    beta^2 times the pool maximum; for beta = 1 this is the exact maximizer
    with smallest-index tie-breaking.
    """
    indices = np.asarray(rule.pool.indices(model, state, m))
    if indices.size == 0:
        raise ValueError("empty greedy pool")
    norms_sq = model.pool_local_norms(state, indices) ** 2
    threshold = rule.beta ** 2 * norms_sq.max()
    hit = np.nonzero(norms_sq >= threshold)[0]
    k = hit[np.argmin(indices[hit])]
    return int(indices[k]), model.local_residual(state, int(indices[k]))


def select_random(rule, m, rng):
    """Draw the next index from the step-m distribution."""
    return rule.distribution(m).sample(rng)


# ---------------------------------------------------------------------------
# relaxation

class Relaxation:
    """Base relaxation; subclasses fix how (alpha_m, omega_m) are chosen."""

    name = "base"

    def alpha(self, m):
        raise NotImplementedError

    def parameters(self, model, state, i, r, m):
        a = self.alpha(m)
        return a, omega_optimal(model, state, i, r, a)


class GAWRRelaxation(Relaxation):
    """alpha_m = 1 - (m+2)^{-1} with omega minimizing the step error."""

    name = "gawr"

    def alpha(self, m):
        return 1.0 - 1.0 / (m + 2)


class PureRelaxation(Relaxation):
    """alpha_m = 1 with omega optimal (pure greedy / exact local step)."""

    name = "pure"

    def alpha(self, m):
        return 1.0


class TwoParamRelaxation(Relaxation):
    """Joint minimization over alpha >= 0 and omega."""

    name = "two_param"

    def alpha(self, m):  # fallback value for degenerate directions
        return 1.0 - 1.0 / (m + 2)

    def parameters(self, model, state, i, r, m):
        return two_param_update(model, state, i, r, m)


def omega_optimal(model, state, i, r, alpha):
    """The error-minimizing relaxation weight along the direction R_i r.

    omega = (alpha * a_i(r, r) + (1 - alpha) * F(R_i r)) / ||R_i r||_a^2,
    computed from b, A and the current iterate only.  A direction of
    negligible energy norm gets omega = 0.
    """
    d2 = model.dir_energy_sq(i, r)
    if d2 <= model.zero_tol ** 2:
        return 0.0
    local_sq = model.local_inner_sq(i, r)
    return (alpha * local_sq + (1.0 - alpha) * model.dir_functional(i, r)) / d2


def two_param_update(model, state, i, r, m):
    """Minimize ||u - alpha u^{(m)} - omega R_i r||_a over alpha >= 0, omega.

    Solves the 2x2 normal equations (right-hand sides use a(u, .) = F(.)),
    clamps alpha at 0 and re-minimizes omega when the unconstrained minimizer
    is infeasible, and falls back to the one-parameter rule at the fixed
    alpha schedule when the Gram matrix is degenerate.
    """
    guu = model.current_energy_sq(state)
    gdd = model.dir_energy_sq(i, r)
    gud = model.dir_inner_current(state, i, r)
    fu = model.current_functional(state)
    fd = model.dir_functional(i, r)
    scale = max(guu, gdd, 1e-300)
    det = guu * gdd - gud * gud
    if det <= 1e-28 * scale ** 2:
        alpha = 1.0 - 1.0 / (m + 2)
        return alpha, omega_optimal(model, state, i, r, alpha)
    alpha = (fu * gdd - fd * gud) / det
    omega = (fd * guu - fu * gud) / det
    if alpha < 0.0:
        alpha = 0.0
        omega = fd / gdd if gdd > model.zero_tol ** 2 else 0.0
    return float(alpha), float(omega)


# ---------------------------------------------------------------------------
# iteration trace and the main loop

@dataclass
class IterationTrace:
    """Per-step record of a run; row m also carries the step taken from m.

    ``index``, ``alpha``, ``omega`` and ``local_norm`` at the final row are
    sentinels (-1 / NaN): no step leaves the last recorded state.
    ``wall_time`` holds per-row monotonic-clock stamps; it is diagnostic only
    and never serialized (output files are deterministic).
    """

    index: np.ndarray
    alpha: np.ndarray
    omega: np.ndarray
    local_norm: np.ndarray
    error: np.ndarray
    seed: object = None
    rule: str = ""
    problem: str = ""
    wall_time: np.ndarray = field(default=None, repr=False)

    @property
    def steps(self):
        return len(self.error) - 1

    @property
    def error_sq(self):
        return self.error ** 2


def run(model, selection, relaxation, steps, seed=None):
    """Run the multiplicative Schwarz iteration from u^{(0)} = 0.

    Identical (model, rules, steps, seed) inputs produce bitwise-identical
    traces; the RNG stream is derived from ``seed`` alone.
    """
    if steps < 0:
        raise ValueError("step count must be nonnegative")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    state = model.new_state()
    M = int(steps)
    index = np.full(M + 1, -1, dtype=np.int64)
    alpha = np.full(M + 1, np.nan)
    omega = np.full(M + 1, np.nan)
    local_norm = np.full(M + 1, np.nan)
    error = np.empty(M + 1)
    wall_time = np.empty(M + 1)
    error[0] = model.error(state)
    wall_time[0] = time.perf_counter()
    for m in range(M):
        if isinstance(selection, GreedyRule):
            i, res = select_greedy(model, state, selection, m)
        elif isinstance(selection, RandomRule):
            i = select_random(selection, m, rng)
            res = model.local_residual(state, i)
        elif isinstance(selection, DeterministicRule):
            i = selection.index(m)
            res = model.local_residual(state, i)
        else:
            raise TypeError(f"unknown selection rule {selection!r}")
        a, w = relaxation.parameters(model, state, i, res.r, m)
        model.apply_update(state, i, res.r, a, w)
        index[m] = i
        alpha[m] = a
        omega[m] = w
        local_norm[m] = res.local_norm
        error[m + 1] = model.error(state)
        wall_time[m + 1] = time.perf_counter()
    return IterationTrace(
        index=index,
        alpha=alpha,
        omega=omega,
        local_norm=local_norm,
        error=error,
        seed=seed,
        rule=type(selection).__name__ + "/" + relaxation.name,
        wall_time=wall_time,
    )


RELAXATIONS = {
    "gawr": GAWRRelaxation,
    "pure": PureRelaxation,
    "two_param": TwoParamRelaxation,
}
