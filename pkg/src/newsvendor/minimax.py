"""Minimax-optimal data-driven policy.

The optimal policy randomizes between two consecutive order statistics
``D_{k-1:n}`` (w.p. 1 - gamma) and ``D_{k:n}`` (w.p. gamma), chosen so that
the worst-case regrets over Bernoulli means below and above 1 - q are
equal. For a few small ``n`` an extremal order statistic is optimal on its
own (degenerate sizes).
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize

from .bernoulli_regret import Side, SideObjective
from .errors import DomainError, InconsistencyError
from .model import Policy, ProblemParams
from .numerics import DEFAULT_GRID_POINTS, DEFAULT_TOL, Tolerance
from .parallel import thread_count


class Degeneracy(str, enum.Enum):
    NONE = "none"
    EXTREMAL_LOW = "extremal_low"  # OS(1) optimal
    EXTREMAL_HIGH = "extremal_high"  # OS(n) optimal


@dataclass(frozen=True)
class MinimaxSolution:
    n: int
    k: int
    gamma: float
    optimal_value: float
    degenerate: Degeneracy = Degeneracy.NONE
    balance_residual: float = 0.0
    sup_left: float = float("nan")
    sup_right: float = float("nan")

    def policy(self) -> Policy:
        """The (randomized) optimal order-statistic policy."""
        if self.degenerate is not Degeneracy.NONE:
            return Policy.single(self.n, self.k)
        return Policy.two_point(self.n, self.k, self.gamma)


class _RankSups:
    """Memoized one-sided suprema of single order statistics for fixed (n, q)."""

    def __init__(self, n, q, tol, grid_points):
        self.n, self.q, self.tol, self.grid_points = n, q, tol, grid_points
        self._cache = {}

    def __call__(self, r: int) -> tuple[float, float]:
        if r not in self._cache:
            sups = []
            for side in (Side.LEFT, Side.RIGHT):
                obj = SideObjective([r], self.n, self.q, side, self.grid_points)
                sups.append(obj.sup([1.0], self.tol)[1])
            self._cache[r] = tuple(sups)
        return self._cache[r]

    def gap(self, r: int) -> float:
        """sup_right - sup_left for OS(r); decreasing in r."""
        left, right = self(r)
        return right - left


def _check_n(n):
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    return int(n)


def check_degenerate(n: int, params: ProblemParams, tol: Tolerance = DEFAULT_TOL,
                     grid_points: int = DEFAULT_GRID_POINTS, _sups: _RankSups | None = None) -> Degeneracy:
    """Whether an extremal order statistic is already minimax optimal."""
    n = _check_n(n)
    sups = _sups or _RankSups(n, params.q, tol, grid_points)
    left1, right1 = sups(1)
    if n == 1:
        # OS(1) is the only policy; the label records which side is worse
        return Degeneracy.EXTREMAL_LOW if left1 >= right1 else Degeneracy.EXTREMAL_HIGH
    if left1 > right1:
        return Degeneracy.EXTREMAL_LOW
    leftn, rightn = sups(n)
    if leftn < rightn:
        return Degeneracy.EXTREMAL_HIGH
    return Degeneracy.NONE


def solve_minimax(n: int, params: ProblemParams, tol: Tolerance = DEFAULT_TOL,
                  grid_points: int = DEFAULT_GRID_POINTS) -> MinimaxSolution:
    """Optimal (k, gamma) and the minimax relative regret for ``n`` samples."""
    n = _check_n(n)
    q = params.q
    sups = _RankSups(n, q, tol, grid_points)

    deg = check_degenerate(n, params, tol, grid_points, sups)
    if deg is not Degeneracy.NONE:
        k = 1 if deg is Degeneracy.EXTREMAL_LOW else n
        left, right = sups(k)
        return MinimaxSolution(n, k, 1.0, max(left, right), deg, abs(left - right), left, right)

    # binary search for the first rank whose right-side sup falls below its
    # left-side sup; a zero gap moves right, so a balanced OS(m) comes back
    # as k = m + 1 with gamma = 0
    j, k = 1, n
    while j < k:
        m = (j + k) // 2
        if sups.gap(m) >= 0:
            j = m + 1
        else:
            k = m
    if k < 2:
        raise InconsistencyError(f"crossing rank {k} < 2 for a non-degenerate size n={n}")

    ranks = [k - 1, k]
    left_obj = SideObjective(ranks, n, q, Side.LEFT, grid_points)
    right_obj = SideObjective(ranks, n, q, Side.RIGHT, grid_points)

    @lru_cache(maxsize=None)
    def side_sups(gamma):
        lam = (1.0 - gamma, gamma)
        return left_obj.sup(lam, tol)[1], right_obj.sup(lam, tol)[1]

    def balance(gamma):
        left, right = side_sups(gamma)
        return right - left

    lo_bal, hi_bal = balance(0.0), balance(1.0)
    if lo_bal < 0 or hi_bal > 0:
        raise InconsistencyError(
            f"no sign change of the balance function at n={n}, k={k}: {lo_bal:.3g}, {hi_bal:.3g}"
        )
    if lo_bal == 0.0:
        gamma = 0.0
    elif hi_bal == 0.0:
        gamma = 1.0
    else:
        gamma = optimize.brentq(balance, 0.0, 1.0, xtol=1e-14, rtol=4 * np.finfo(float).eps,
                                maxiter=max(tol.max_iter, 100))
    left, right = side_sups(gamma)
    return MinimaxSolution(n, k, float(gamma), max(left, right), Degeneracy.NONE, abs(right - left), left, right)


def derandomize(sol: MinimaxSolution, n: int | None = None) -> Policy:
    """Deterministic counterpart: stock gamma * D_{k:n} + (1 - gamma) * D_{k-1:n}."""
    if sol.degenerate is not Degeneracy.NONE:
        raise DomainError("degenerate solutions are single order statistics; nothing to derandomize")
    n = sol.n if n is None else n
    if n != sol.n:
        raise DomainError(f"solution was computed for n={sol.n}, not n={n}")
    return Policy.convex_combination(n, sol.k, sol.gamma)


def optimal_curve(n_max: int, params: ProblemParams, tol: Tolerance = DEFAULT_TOL,
                  n_values=None) -> list[MinimaxSolution]:
    """solve_minimax for n = 1..n_max (or the given ``n_values``)."""
    if n_values is None:
        n_values = range(1, _check_n(n_max) + 1)
    n_values = list(n_values)
    workers = thread_count()
    if workers > 1 and len(n_values) > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda n: solve_minimax(n, params, tol), n_values))
    return [solve_minimax(n, params, tol) for n in n_values]


def saa_rank_of(n: int, params: ProblemParams) -> int:
    return Policy.saa(n, params).rank


def crossing_conditions_hold(sol: MinimaxSolution, params: ProblemParams, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Re-evaluate both crossing conditions for the returned k."""
    if sol.degenerate is not Degeneracy.NONE:
        return True
    sups = _RankSups(sol.n, params.q, tol, DEFAULT_GRID_POINTS)
    return bool(sups.gap(sol.k - 1) >= 0 and sups.gap(sol.k) <= 0)


__all__ = [
    "Degeneracy", "MinimaxSolution", "check_degenerate", "solve_minimax",
    "derandomize", "optimal_curve", "crossing_conditions_hold", "saa_rank_of",
]
