"""Lazily-indexed orthonormal diagonal model.

The target u = sum_i c_i psi_i has finitely many nonzero coefficients in a
complete orthonormal system; the splitting consists of the one-dimensional
coordinate injections with unit local forms, so every local solve returns the
coefficient mismatch c_i - u_i directly and the uniform bound is 1.  Iterates
stay supported inside the support of c, which keeps all operations finite even
though the index set is the whole of the natural numbers.
"""

import math

import numpy as np

from .problems import BlockResidual, FiniteSplitting, Problem, SplittingComponent


class DiagonalState:
    __slots__ = ("u", "steps")

    def __init__(self, d):
        self.u = np.zeros(d)
        self.steps = 0


class DiagonalModel:
    """Orthonormal diagonal problem/splitting pair with finite support."""

    uniform_bound = 1.0

    def __init__(self, coefficients):
        if isinstance(coefficients, dict):
            items = sorted((int(i), float(v)) for i, v in coefficients.items())
        else:
            arr = np.asarray(coefficients, dtype=float)
            items = [(i + 1, float(v)) for i, v in enumerate(arr)]
        if any(i < 1 for i, _ in items):
            raise ValueError("diagonal model indices must be >= 1")
        self.support_indices = np.array([i for i, _ in items], dtype=np.int64)
        self.coefficients = np.array([v for _, v in items])
        self._pos = {i: k for k, i in enumerate(self.support_indices)}
        self.zero_tol = 1e-14 * (1.0 + float(np.linalg.norm(self.coefficients)))
        self._solution_norm = float(np.linalg.norm(self.coefficients))

    # -- solver interface ---------------------------------------------------

    def component_count(self):
        return None

    def default_pool_indices(self):
        return self.support_indices

    def new_state(self):
        return DiagonalState(self.coefficients.size)

    def local_residual(self, state, i):
        pos = self._pos.get(int(i))
        if pos is None:
            return BlockResidual(int(i), 0.0, 0.0)
        r = self.coefficients[pos] - state.u[pos]
        return BlockResidual(int(i), float(r), abs(float(r)))

    def pool_local_norms(self, state, indices):
        res = np.abs(self.coefficients - state.u)
        out = np.zeros(len(indices))
        for k, i in enumerate(indices):
            pos = self._pos.get(int(i))
            if pos is not None:
                out[k] = res[pos]
        return out

    def dir_energy_sq(self, i, r):
        return float(r) ** 2

    def local_inner_sq(self, i, r):
        return float(r) ** 2

    def dir_functional(self, i, r):
        pos = self._pos.get(int(i))
        return float(self.coefficients[pos]) * float(r) if pos is not None else 0.0

    def dir_inner_current(self, state, i, r):
        pos = self._pos.get(int(i))
        return float(state.u[pos]) * float(r) if pos is not None else 0.0

    def current_energy_sq(self, state):
        return float(state.u @ state.u)

    def current_functional(self, state):
        return float(self.coefficients @ state.u)

    def apply_update(self, state, i, r, alpha, omega):
        state.u = alpha * state.u
        pos = self._pos.get(int(i))
        if pos is not None:
            state.u[pos] += omega * float(r)
        state.steps += 1

    def error(self, state):
        return float(np.linalg.norm(self.coefficients - state.u))

    def solution_norm(self):
        return self._solution_norm

    # -- conversions --------------------------------------------------------

    def to_dense(self, n=None):
        """Dense embedding on R^n with A = I and coordinate components."""
        top = int(self.support_indices.max()) if self.support_indices.size else 1
        if n is None:
            n = top
        if n < top:
            raise ValueError(f"embedding dimension {n} below largest support index {top}")
        b = np.zeros(n)
        b[self.support_indices - 1] = self.coefficients
        problem = Problem(np.eye(n), b)
        components = [
            SplittingComponent(i + 1, np.eye(n)[:, [i]], np.eye(1)) for i in range(n)
        ]
        return problem, FiniteSplitting(problem, components)


def make_diagonal(coefficients):
    """Build the orthonormal diagonal model from a coefficient map or array."""
    return DiagonalModel(coefficients)


def a1_norm(model):
    """The ell^1 coefficient norm; for the orthonormal one-dimensional
    splitting the infimum over representations is attained coordinatewise."""
    return float(np.abs(model.coefficients).sum())


def ainfty_pi_norm(model, pi):
    """sup_i |c_i| / pi_i; infinite when c has mass where pi has none."""
    worst = 0.0
    for i, c in zip(model.support_indices, model.coefficients):
        if c == 0.0:
            continue
        p = pi.prob(int(i))
        if p == 0.0:
            return math.inf
        worst = max(worst, abs(c) / p)
    return worst
