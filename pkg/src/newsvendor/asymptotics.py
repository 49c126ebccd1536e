"""Large-sample behaviour: the constant C* with R*_n ~ C*/sqrt(n), and the
limit functionals H+ and H- of the one-sided regrets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .bernoulli_regret import Side, saa_policy, worst_case_regret
from .errors import DomainError
from .minimax import solve_minimax
from .model import ProblemParams
from .numerics import DEFAULT_TOL, Tolerance, maximize_scalar, std_normal_cdf

P_UPPER = 8.0  # p (1 - Phi(p)) < 1e-14 beyond this


def _gauss_objective(p):
    return p * (1.0 - std_normal_cdf(p))


@dataclass(frozen=True)
class AsymptoticProfile:
    c_star: float
    p_star: float
    bracket_max: float  # max_p p (1 - Phi(p)), independent of q

    def approximation(self, n) -> np.ndarray | float:
        """C* / sqrt(n)."""
        return self.c_star / np.sqrt(n)


def c_star(params: ProblemParams, tol: Tolerance = DEFAULT_TOL) -> AsymptoticProfile:
    p, val = maximize_scalar(_gauss_objective, 0.0, P_UPPER, tol=tol)
    return AsymptoticProfile(val / math.sqrt(params.q * (1.0 - params.q)), p, val)


def _scale(params):
    return math.sqrt(params.q * (1.0 - params.q))


def h_plus(delta, ell, params: ProblemParams):
    """(delta / (q(1-q))) (1 - Phi((delta - ell) / sqrt(q(1-q))))."""
    delta = np.asarray(delta, dtype=float)
    if np.any(delta < 0):
        raise DomainError(f"delta must be >= 0, got {delta}")
    s = _scale(params)
    out = delta / (s * s) * (1.0 - std_normal_cdf((delta - np.asarray(ell, dtype=float)) / s))
    return out if np.ndim(out) else float(out)


def h_minus(delta, ell, params: ProblemParams):
    """(delta / (q(1-q))) (1 - Phi((delta + ell) / sqrt(q(1-q))))."""
    return h_plus(delta, -np.asarray(ell, dtype=float), params)


def h_max(ell: float, params: ProblemParams, tol: Tolerance = DEFAULT_TOL) -> float:
    """max over delta >= 0 and both signs of H+-(delta, ell)."""
    hi = _scale(params) * P_UPPER + abs(ell)
    best = 0.0
    for fn in (h_plus, h_minus):
        best = max(best, maximize_scalar(lambda d: fn(d, ell, params), 0.0, hi, tol=tol)[1])
    return best


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    sqrtn_saa: float
    sqrtn_opt: float
    c_star: float


def asymptotic_convergence_check(params: ProblemParams, n_list: Iterable[int],
                                 tol: Tolerance = DEFAULT_TOL) -> list[ConvergenceRow]:
    """sqrt(n)-scaled exact SAA and minimax regrets next to C*."""
    n_list = [int(n) for n in n_list]
    if not n_list:
        raise DomainError("n_list must be nonempty")
    cs = c_star(params, tol).c_star
    rows = []
    for n in n_list:
        saa = worst_case_regret(saa_policy(n, params), params, Side.FULL, tol).value
        opt = solve_minimax(n, params, tol).optimal_value
        root = math.sqrt(n)
        rows.append(ConvergenceRow(n, root * saa, root * opt, cs))
    return rows


__all__ = [
    "AsymptoticProfile", "ConvergenceRow", "c_star", "h_plus", "h_minus", "h_max",
    "asymptotic_convergence_check",
]
