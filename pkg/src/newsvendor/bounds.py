"""Instance-independent SAA regret bound U(n) and sample-size thresholds.

A threshold N(tau) is the smallest m such that the regret curve stays at or
below tau for every n >= m. For the exact curves (which are not monotone)
the quantifier can only be checked up to a finite horizon ``n_cap``; the
result records that horizon as ``certified_up_to``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

from .bernoulli_regret import saa_curve
from .errors import DomainError, HorizonError
from .minimax import optimal_curve
from .model import ProblemParams
from .numerics import DEFAULT_TOL, Tolerance, integrate_adaptive

LEVI_CAP = 100_000
DEFAULT_MIN_HORIZON = 1000
_FIRST_CROSSING_LIMIT = 200_000
_LEVI_TOL = Tolerance(abs_tol=1e-14, rel_tol=1e-10, max_iter=200)


class Method(str, enum.Enum):
    EXACT_SAA = "ExactSAA"
    LEVI_UB = "LeviUB"
    OPTIMAL = "Optimal"


@dataclass(frozen=True)
class ThresholdResult:
    tau: float
    method: Method
    n_star: Optional[int]  # None when the horizon is exceeded
    n_cap: int
    certified_up_to: int

    @property
    def exceeded(self) -> bool:
        return self.n_star is None

    def label(self) -> str:
        """n_star as printed in tables; '100000+' style when exceeded."""
        return f"{self.n_cap}+" if self.n_star is None else str(self.n_star)


# ---------------------------------------------------------------------------
# Levi bound
# ---------------------------------------------------------------------------

def _levi_kink(n: int, c: float) -> float:
    """Positive root of n c e^2 = ln 2 (18 + 8 e), where 2 exp(.) drops to 1."""
    a, b0, c0 = n * c, -8.0 * math.log(2.0), -18.0 * math.log(2.0)
    return (-b0 + math.sqrt(b0 * b0 - 4.0 * a * c0)) / (2.0 * a)


def levi_bound(n: int, params: ProblemParams, tol: Tolerance = _LEVI_TOL) -> float:
    """U(n) = int_0^inf min(1, 2 exp(-n e^2 min(q,1-q) / (18 + 8 e))) de.

    The integrand bounds the probability that the relative regret exceeds
    e, so it is capped at one; below the kink the integral is exact.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    c = min(params.q, 1.0 - params.q)
    e0 = _levi_kink(int(n), c)

    def f(e):
        return 2.0 * math.exp(-n * e * e * c / (18.0 + 8.0 * e))

    # the tail decays roughly like exp(-n c e / 8)
    window = max(8.0 / (n * c), 1e-6)
    return e0 + integrate_adaptive(f, e0, math.inf, tol, window=window)


def _levi_threshold(tau: float, params: ProblemParams, n_cap: int, tol: Tolerance) -> ThresholdResult:
    if levi_bound(n_cap, params, tol) > tau:
        return ThresholdResult(tau, Method.LEVI_UB, None, n_cap, n_cap)
    lo, hi = 1, n_cap  # U(hi) <= tau
    if levi_bound(1, params, tol) <= tau:
        hi = 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if levi_bound(mid, params, tol) <= tau:
            hi = mid
        else:
            lo = mid
    # U is strictly decreasing, so monotonicity certifies every n >= hi
    return ThresholdResult(tau, Method.LEVI_UB, hi, n_cap, n_cap)


# ---------------------------------------------------------------------------
# Exact curves
# ---------------------------------------------------------------------------

class RegretCurve:
    """Memoized exact worst-case regret as a function of n (per call site)."""

    def __init__(self, method: Method, params: ProblemParams, tol: Tolerance = DEFAULT_TOL, chunk: int = 64):
        if method is Method.LEVI_UB:
            raise DomainError("RegretCurve covers the exact methods only")
        self.method, self.params, self.tol, self.chunk = method, params, tol, chunk
        self._values: list[float] = []

    def _extend(self, upto: int) -> None:
        start = len(self._values) + 1
        if upto < start:
            return
        ns = range(start, upto + 1)
        if self.method is Method.EXACT_SAA:
            vals = [p.regret for p in saa_curve(upto, self.params, self.tol, n_values=ns)]
        else:
            vals = [s.optimal_value for s in optimal_curve(upto, self.params, self.tol, n_values=ns)]
        self._values.extend(vals)

    def __call__(self, n: int) -> float:
        if n > len(self._values):
            self._extend(max(n, len(self._values) + self.chunk))
        return self._values[n - 1]

    def values(self, upto: int) -> list[float]:
        self._extend(upto)
        return self._values[:upto]

    def first_crossing(self, tau: float, limit: int = _FIRST_CROSSING_LIMIT) -> int:
        n = 1
        while self(n) > tau:
            n += 1
            if n > limit:
                raise HorizonError(f"regret stays above {tau} up to n={limit}")
        return n


def _last_violation(values: Sequence[float], tau: float) -> int:
    """Largest n with values[n-1] > tau (0 if none)."""
    for n in range(len(values), 0, -1):
        if values[n - 1] > tau:
            return n
    return 0


def _exact_threshold(tau, method, curve: RegretCurve, n_cap: Optional[int]) -> ThresholdResult:
    if n_cap is None:
        n_cap = max(DEFAULT_MIN_HORIZON, 4 * curve.first_crossing(tau))
    values = curve.values(n_cap)
    if values[-1] > tau:
        raise HorizonError(f"{method.value} regret at the horizon n={n_cap} is {values[-1]:.6g} > {tau}")
    return ThresholdResult(tau, method, _last_violation(values, tau) + 1, n_cap, n_cap)


def _check_tau(tau):
    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau must lie in (0, 1), got {tau}")


def threshold(tau: float, method: Method | str, params: ProblemParams, n_cap: Optional[int] = None,
              tol: Tolerance = DEFAULT_TOL, curve: Optional[RegretCurve] = None) -> ThresholdResult:
    """Smallest sample size whose regret stays <= tau from there on.

    ``n_cap`` defaults to 100000 for LeviUB (reported as exceeded beyond it)
    and to max(1000, 4 * first crossing) for the exact methods, which raise
    HorizonError when the curve is still above tau at the horizon.
    """
    _check_tau(tau)
    method = Method(method)
    if n_cap is not None and (int(n_cap) != n_cap or n_cap < 1):
        raise DomainError(f"n_cap must be a positive integer, got {n_cap}")
    if method is Method.LEVI_UB:
        return _levi_threshold(tau, params, LEVI_CAP if n_cap is None else int(n_cap), _LEVI_TOL)
    curve = curve or RegretCurve(method, params, tol)
    return _exact_threshold(tau, method, curve, n_cap)


def threshold_table(taus: Iterable[float], methods: Iterable[Method | str], params: ProblemParams,
                    n_cap: Optional[int] = None, tol: Tolerance = DEFAULT_TOL,
                    progress: Optional[Callable[[str], None]] = None) -> list[ThresholdResult]:
    """Thresholds for every (method, tau), sharing one memoized curve per method."""
    taus = list(taus)
    out = []
    for method in map(Method, methods):
        curve = None if method is Method.LEVI_UB else RegretCurve(method, params, tol)
        for tau in taus:
            if progress:
                progress(f"q={params.q:g} {method.value} tau={tau:g}")
            out.append(threshold(tau, method, params, n_cap, tol, curve))
    return out


__all__ = [
    "Method", "ThresholdResult", "RegretCurve", "levi_bound", "threshold", "threshold_table", "LEVI_CAP",
]
