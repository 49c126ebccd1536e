"""Exact expected cost of order-statistic mixtures against arbitrary demand
distributions, through the integral representation

    C = (b+h) int_0^inf sum_i lam_i [ (1 - B_{i,n}(F(y))) (F(y) - q) + q (1 - F(y)) ] dy.

Discrete distributions make the integrand piecewise constant, so their cost
is an exact finite sum. Continuous distributions are integrated panel by
panel between quantiles, with the far tail closed analytically.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, DomainError, UnsupportedPolicyError
from .model import (
    Bernoulli,
    DemandDistribution,
    DiscreteFinite,
    Policy,
    PolicyForm,
    ProblemParams,
    oracle_cost,
)
from .numerics import DEFAULT_TOL, Tolerance, _tail_complement, integrate_adaptive

TAIL_LEVEL = 1e-12
MAX_CANDIDATES = 10_000_000
_BODY_LEVELS = np.linspace(0.0, 0.9, 10)
# four panels per decade of the survival probability down to TAIL_LEVEL
_TAIL_LEVELS = 1.0 - np.logspace(-1.25, math.log10(TAIL_LEVEL), 44)


@dataclass(frozen=True)
class CostBreakdown:
    policy_cost: float
    oracle_cost: float
    relative_regret: float


def relative_regret(policy_cost: float, opt: float, atol: float = 1e-12) -> float:
    """policy_cost / opt - 1, with 0 (resp. inf) for a zero oracle and zero (resp. positive) cost."""
    if opt > 0:
        return policy_cost / opt - 1.0
    return 0.0 if policy_cost <= atol else math.inf


def _integrand_factory(ranks, lam, n, q):
    ranks = np.asarray(ranks, dtype=float)

    def g(s):
        """Per-unit-length integrand as a function of the survival s = 1 - F(y)."""
        s = np.asarray(s, dtype=float)
        comp = _tail_complement(ranks[:, None], n, np.atleast_1d(s)[None, :])  # 1 - B_{i,n}(1 - s)
        vals = lam @ (comp * (1.0 - q - s)) + q * s
        return vals if s.ndim else float(vals[0])

    return g


def _check_policy(policy: Policy):
    if policy.form is PolicyForm.CONVEX:
        raise UnsupportedPolicyError(
            "the deterministic convex-combination level has no closed cost integral; use simulation"
        )


def _discrete_cost(g, dist: DiscreteFinite) -> float:
    pts = np.asarray(dist.points)
    if pts.size == 1:
        return 0.0
    s_left = 1.0 - dist._cum()[:-1]
    return float(np.dot(np.diff(pts), g(s_left)))


def _continuous_cost(g, ranks, lam, n, q, dist: DemandDistribution, tol: Tolerance) -> float:
    lo = dist.lower
    if math.isfinite(dist.upper):
        edges = np.unique(np.concatenate([[lo], dist.quantile(_BODY_LEVELS[1:]), [dist.upper]]))
        tail = 0.0
    else:
        levels = np.concatenate([_BODY_LEVELS[1:], _TAIL_LEVELS])
        edges = np.unique(np.concatenate([[lo], dist.quantile(levels)]))
        top = float(edges[-1])
        # beyond the (1 - 1e-12)-quantile 1 - B_{i,n}(F) is O((1-F)^{n-i+1}); only
        # rank n contributes at first order, with 1 - F^n ~ n (1 - F)
        w_n = float(lam[ranks == n].sum()) if np.any(ranks == n) else 0.0
        tail = (q + w_n * n * (1.0 - q)) * float(dist.expected_excess(top))
    body = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        body += integrate_adaptive(lambda y: g(float(dist.sf(y))), float(a), float(b), tol)
    return body + tail


def exact_policy_cost(policy: Policy, dist: DemandDistribution, params: ProblemParams,
                      tol: Tolerance = DEFAULT_TOL) -> CostBreakdown:
    """Expected out-of-sample cost, oracle cost and relative regret."""
    _check_policy(policy)
    mean = dist.mean  # DivergenceError for infinite means
    if not math.isfinite(mean):
        raise DivergenceError("distribution has an infinite mean")
    ranks, lam = policy.support()
    q, n = params.q, policy.n
    g = _integrand_factory(ranks, lam, n, q)
    if isinstance(dist, Bernoulli):
        dist = dist.as_discrete()
    if isinstance(dist, DiscreteFinite):
        raw = _discrete_cost(g, dist)
    else:
        raw = _continuous_cost(g, ranks, lam, n, q, dist, tol)
    cost = (params.b + params.h) * raw
    opt = oracle_cost(dist, params)
    return CostBreakdown(cost, opt, relative_regret(cost, opt))


# ---------------------------------------------------------------------------
# Brute-force search over discrete distributions
# ---------------------------------------------------------------------------

def _compositions(units: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``parts`` summing to ``units``,
    in lexicographic order of their stars-and-bars encoding."""
    if parts == 1:
        return np.array([[units]], dtype=np.int64)
    bars = np.array(list(itertools.combinations(range(units + parts - 1), parts - 1)), dtype=np.int64)
    bars = bars.reshape(-1, parts - 1)
    left = np.concatenate([np.full((bars.shape[0], 1), -1), bars], axis=1)
    right = np.concatenate([bars, np.full((bars.shape[0], 1), units + parts - 1)], axis=1)
    return right - left - 1


def bernoulli_dominance_search(policy: Policy, params: ProblemParams, support_grid, mass_step: float,
                               max_candidates: int = MAX_CANDIDATES) -> tuple[float, DiscreteFinite]:
    """Largest exact relative regret over all distributions on ``support_grid``
    whose masses are multiples of ``mass_step``.

    Ties keep the first candidate in enumeration order.
    """
    _check_policy(policy)
    grid = np.unique(np.asarray(support_grid, dtype=float))
    if grid.size == 0 or np.any(grid < 0) or not np.all(np.isfinite(grid)):
        raise DomainError("support_grid must be a nonempty set of finite nonnegative levels")
    if not 0.0 < mass_step <= 1.0:
        raise DomainError(f"mass_step must lie in (0, 1], got {mass_step}")
    units = round(1.0 / mass_step)
    if units < 1 or abs(units * mass_step - 1.0) > 1e-9:
        raise DomainError(f"mass_step must divide 1, got {mass_step}")
    parts = grid.size
    count = math.comb(units + parts - 1, parts - 1)
    if count > max_candidates:
        raise DomainError(f"{count} candidate distributions exceed the limit of {max_candidates}")

    comps = _compositions(units, parts)  # (count, parts) integer units
    masses = comps / units
    cum = np.cumsum(comps, axis=1) / units  # exact multiples of the step, never above 1
    q, n = params.q, policy.n
    ranks, lam = policy.support()
    g = _integrand_factory(ranks, lam, n, q)
    scale = params.b + params.h

    widths = np.diff(grid)
    if parts > 1:
        f_left = cum[:, :-1]
        s_left = (units - np.cumsum(comps, axis=1)[:, :-1]) / units
        cost = scale * (g(s_left.ravel()).reshape(s_left.shape) @ widths)
        opt = scale * (np.minimum((1.0 - q) * f_left, q * (1.0 - f_left)) @ widths)
    else:
        cost = opt = np.zeros(masses.shape[0])

    with np.errstate(divide="ignore", invalid="ignore"):
        reg = np.where(opt > 0, cost / np.where(opt > 0, opt, 1.0) - 1.0,
                       np.where(cost <= 1e-12, 0.0, np.inf))
    best = int(np.argmax(reg))
    keep = masses[best] > 0
    winner = DiscreteFinite(tuple(grid[keep]), tuple(masses[best][keep] / masses[best][keep].sum()))
    return float(reg[best]), winner


__all__ = ["CostBreakdown", "exact_policy_cost", "bernoulli_dominance_search", "relative_regret"]
