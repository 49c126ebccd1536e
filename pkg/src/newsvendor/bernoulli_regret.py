"""Closed-form relative regret of order-statistic mixtures against
Bernoulli demand, and worst-case evaluation by a line search over the
Bernoulli mean.

Writing ``a = 1 - mu`` for the probability of a zero demand, the regret of
the single order statistic ``OS(r)`` is

    mu <= 1 - q:  (1 - mu - q) * (1 - B_{r,n}(1 - mu)) / (q mu)
    mu >= 1 - q:  (mu + q - 1) * B_{r,n}(1 - mu) / ((1 - q)(1 - mu))

and a mixture's regret is the weight-average of these. The two branches
meet at zero at ``mu = 1 - q``.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DomainError, UnsupportedPolicyError
from .model import Policy, PolicyForm, ProblemParams, RegretEvaluation
from .numerics import DEFAULT_GRID_POINTS, DEFAULT_TOL, Tolerance, _tail, _tail_complement, maximize_scalar
from .parallel import thread_count


class Side(str, enum.Enum):
    FULL = "full"
    LEFT = "left"  # mu in [0, 1 - q]
    RIGHT = "right"  # mu in [1 - q, 1]

    def interval(self, q: float) -> tuple[float, float]:
        if self is Side.LEFT:
            return 0.0, 1.0 - q
        if self is Side.RIGHT:
            return 1.0 - q, 1.0
        return 0.0, 1.0


def os_regret_left(ranks, n: int, q: float, mu):
    """Regret of OS(r) for mu in [0, 1-q]; rows = ranks, columns = mu."""
    ranks = np.atleast_1d(np.asarray(ranks, dtype=float))[:, None]
    mu = np.atleast_1d(np.asarray(mu, dtype=float))[None, :]
    comp = _tail_complement(ranks, n, mu)  # 1 - B_{r,n}(1 - mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (1.0 - mu - q) * comp / (q * mu)
    # mu -> 0: only r = n survives, with limit (1 - q) n / q
    limit = np.where(ranks == n, (1.0 - q) * n / q, 0.0)
    return np.where(mu == 0.0, limit, val)


def os_regret_right(ranks, n: int, q: float, mu):
    """Regret of OS(r) for mu in [1-q, 1]; rows = ranks, columns = mu."""
    ranks = np.atleast_1d(np.asarray(ranks, dtype=float))[:, None]
    mu = np.atleast_1d(np.asarray(mu, dtype=float))[None, :]
    alpha = 1.0 - mu
    tail = _tail(ranks, n, alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (mu + q - 1.0) * tail / ((1.0 - q) * alpha)
    # mu -> 1: only r = 1 survives, with limit q n / (1 - q)
    limit = np.where(ranks == 1, q * n / (1.0 - q), 0.0)
    return np.where(mu == 1.0, limit, val)


def os_regret(ranks, n: int, q: float, mu):
    """Regret matrix of single order statistics over the full mu range."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    left = mu <= 1.0 - q
    out = np.empty((np.size(ranks), mu.size))
    if left.any():
        out[:, left] = os_regret_left(ranks, n, q, mu[left])
    if (~left).any():
        out[:, ~left] = os_regret_right(ranks, n, q, mu[~left])
    out[:, mu == 1.0 - q] = 0.0
    return np.maximum(out, 0.0)


def _mixture_support(policy: Policy):
    if policy.form is PolicyForm.CONVEX:
        raise UnsupportedPolicyError(
            "convex-combination policies have no mixture regret formula; "
            "evaluate policy.as_two_point() (identical against Bernoulli demand)"
        )
    return policy.support()


def regret_vs_bernoulli(policy: Policy, params: ProblemParams, mu):
    """Relative regret of a mixture policy against Bernoulli(mu)."""
    ranks, lam = _mixture_support(policy)
    mu_arr = np.asarray(mu, dtype=float)
    if np.any(np.isnan(mu_arr)) or np.any(mu_arr < 0) or np.any(mu_arr > 1):
        raise DomainError(f"Bernoulli mean must lie in [0, 1], got {mu}")
    vals = lam @ os_regret(ranks, policy.n, params.q, mu_arr.ravel())
    if mu_arr.ndim == 0:
        return float(vals[0])
    return vals.reshape(mu_arr.shape)


class SideObjective:
    """Mixture regret restricted to one side of 1 - q, with the grid values
    of each supporting order statistic cached so re-weighting is cheap."""

    def __init__(self, ranks, n: int, q: float, side: Side, grid_points: int = DEFAULT_GRID_POINTS):
        if side is Side.FULL:
            raise DomainError("SideObjective needs a one-sided interval")
        self.ranks = np.atleast_1d(np.asarray(ranks, dtype=int))
        self.n, self.q, self.side = n, q, side
        self.lo, self.hi = side.interval(q)
        self.grid_points = grid_points
        self._fn = os_regret_left if side is Side.LEFT else os_regret_right
        xs = np.linspace(self.lo, self.hi, grid_points)
        self.grid = self._fn(self.ranks, n, q, xs)
        # exact zero at the shared endpoint 1 - q
        self.grid[:, -1 if side is Side.LEFT else 0] = 0.0

    def values(self, lam, mu):
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        vals = np.asarray(lam) @ self._fn(self.ranks, self.n, self.q, mu)
        vals = np.where(mu == 1.0 - self.q, 0.0, vals)
        return vals

    def sup(self, lam, tol: Tolerance = DEFAULT_TOL) -> tuple[float, float]:
        lam = np.asarray(lam, dtype=float)

        def f(mu):
            v = self.values(lam, mu)
            return v if np.ndim(mu) else float(v[0])

        return maximize_scalar(f, self.lo, self.hi, self.grid_points, tol, grid_values=lam @ self.grid)


def one_sided_sup(policy: Policy, params: ProblemParams, side: Side,
                  tol: Tolerance = DEFAULT_TOL, grid_points: int = DEFAULT_GRID_POINTS) -> tuple[float, float]:
    """(value, argmax_mu) of the regret on one side of 1 - q."""
    ranks, lam = _mixture_support(policy)
    obj = SideObjective(ranks, policy.n, params.q, side, grid_points)
    mu, val = obj.sup(lam, tol)
    return max(val, 0.0), mu


def worst_case_regret(policy: Policy, params: ProblemParams, side: Side | str = Side.FULL,
                      tol: Tolerance = DEFAULT_TOL, grid_points: int = DEFAULT_GRID_POINTS) -> RegretEvaluation:
    """Supremum of the Bernoulli regret over the requested range of means.

    By the Bernoulli worst-case property this is also the supremum over
    every demand distribution with finite mean. The full range is handled
    as the larger of the two one-sided suprema.
    """
    side = Side(side)
    if side is not Side.FULL:
        val, mu = one_sided_sup(policy, params, side, tol, grid_points)
        return RegretEvaluation(val, mu, side.value)
    lv, lmu = one_sided_sup(policy, params, Side.LEFT, tol, grid_points)
    rv, rmu = one_sided_sup(policy, params, Side.RIGHT, tol, grid_points)
    if lv >= rv:
        return RegretEvaluation(lv, lmu, Side.FULL.value)
    return RegretEvaluation(rv, rmu, Side.FULL.value)


def saa_policy(n: int, params: ProblemParams) -> Policy:
    """SAA: all mass on the ceil(q n)-th order statistic."""
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    return Policy.saa(int(n), params)


@dataclass(frozen=True)
class CurvePoint:
    n: int
    regret: float
    argmax_mu: float


def saa_curve(n_max: int, params: ProblemParams, tol: Tolerance = DEFAULT_TOL,
              n_values: Iterable[int] | None = None) -> list[CurvePoint]:
    """Exact worst-case regret of SAA for n = 1..n_max (or ``n_values``)."""
    if n_values is None:
        if int(n_max) != n_max or n_max < 1:
            raise DomainError(f"n_max must be a positive integer, got {n_max}")
        n_values = range(1, int(n_max) + 1)

    def one(n):
        ev = worst_case_regret(saa_policy(n, params), params, Side.FULL, tol)
        return CurvePoint(int(n), ev.value, ev.argmax_mu)

    n_values = list(n_values)
    workers = thread_count()
    if workers > 1 and len(n_values) > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(one, n_values))
    return [one(n) for n in n_values]
