"""Scalar numerical primitives: binomial tails, Gaussian cdf, 1-D search,
root bracketing and adaptive quadrature.

Everything here is pure and thread-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from .errors import BracketError, ConvergenceError, DomainError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_GRID_POINTS = 4097


@dataclass(frozen=True)
class Tolerance:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_iter: int = 200

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise DomainError(f"abs_tol must be > 0, got {self.abs_tol}")
        if not self.rel_tol >= 0:
            raise DomainError(f"rel_tol must be >= 0, got {self.rel_tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise DomainError(f"max_iter must be a positive integer, got {self.max_iter}")


DEFAULT_TOL = Tolerance()


# ---------------------------------------------------------------------------
# Binomial tails
# ---------------------------------------------------------------------------

def _check_rank(i, n):
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    i_arr = np.asarray(i)
    if np.any(i_arr < 1) or np.any(i_arr > n) or np.any(i_arr != np.floor(i_arr)):
        raise DomainError(f"rank must lie in 1..{n}, got {i}")


def bernstein_tail(i, n, y):
    """P(Binomial(n, y) >= i), i.e. sum_{j>=i} C(n,j) y^j (1-y)^(n-j).

    Evaluated as the regularized incomplete beta I_y(i, n-i+1). Accepts
    scalar or array ``i`` and ``y`` (broadcast together). Exactly 0 at y=0
    and exactly 1 at y=1.
    """
    _check_rank(i, n)
    y_arr = np.asarray(y, dtype=float)
    if np.any(np.isnan(y_arr)) or np.any(y_arr < 0) or np.any(y_arr > 1):
        raise DomainError(f"y must lie in [0, 1], got {y}")
    return _tail(i, n, y_arr)


def _tail(i, n, y):
    # unchecked; betainc already returns exact 0/1 at the endpoints
    i = np.asarray(i, dtype=float)
    out = special.betainc(i, n - i + 1.0, y)
    return out if np.ndim(out) else float(out)


def _tail_complement(i, n, y_complement):
    """1 - B_{i,n}(1 - y_complement), computed without cancellation."""
    i = np.asarray(i, dtype=float)
    out = special.betainc(n - i + 1.0, i, y_complement)
    return out if np.ndim(out) else float(out)


def bernstein_tail_logsum(i: int, n: int, y: float) -> float:
    """Reference evaluation of the binomial tail by log-space summation.

    Slower than :func:`bernstein_tail`; used as an independent check.
    """
    _check_rank(i, n)
    if not 0.0 <= y <= 1.0:
        raise DomainError(f"y must lie in [0, 1], got {y}")
    if y == 0.0:
        return 0.0
    if y == 1.0:
        return 1.0
    ly, l1y = math.log(y), math.log1p(-y)
    logs = [
        math.lgamma(n + 1) - math.lgamma(j + 1) - math.lgamma(n - j + 1) + j * ly + (n - j) * l1y
        for j in range(int(i), int(n) + 1)
    ]
    top = max(logs)
    return min(1.0, math.exp(top) * math.fsum(math.exp(v - top) for v in logs))


def binomial_pmf(j, n, y):
    """C(n,j) y^j (1-y)^(n-j), vectorized."""
    return special.binom(n, j) * np.power(y, j) * np.power(1.0 - y, n - j)


# ---------------------------------------------------------------------------
# Gaussian
# ---------------------------------------------------------------------------

def std_normal_cdf(x):
    """Standard normal cdf via the complementary error function."""
    out = special.ndtr(np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------

def _golden_max(f, a, b, width, max_iter):
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > width:
        if it >= max_iter:
            raise ConvergenceError(
                f"golden-section refinement did not reach width {width} in {max_iter} steps"
            )
        it += 1
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def maximize_scalar(
    f: Callable,
    lo: float,
    hi: float,
    grid_points: int = DEFAULT_GRID_POINTS,
    tol: Tolerance = DEFAULT_TOL,
    grid_values: Optional[np.ndarray] = None,
) -> tuple[float, float]:
    """Maximize ``f`` on [lo, hi]: uniform grid scan, then golden-section
    refinement inside the cell pair around the best grid point.

    ``f`` must accept a numpy array (used for the grid) as well as a float.
    Pass ``grid_values`` to reuse values already computed on
    ``np.linspace(lo, hi, grid_points)``.

    Returns ``(argmax, max_value)``; the value is never below the grid max.
    """
    if not lo < hi:
        raise DomainError(f"need lo < hi, got [{lo}, {hi}]")
    if grid_points < 2:
        raise DomainError("grid_points must be >= 2")
    xs = np.linspace(lo, hi, grid_points)
    vals = np.asarray(f(xs) if grid_values is None else grid_values, dtype=float)
    best = int(np.argmax(vals))
    x_best, f_best = float(xs[best]), float(vals[best])

    a = xs[max(best - 1, 0)]
    b = xs[min(best + 1, grid_points - 1)]
    x_ref, f_ref = _golden_max(f, float(a), float(b), tol.abs_tol, tol.max_iter)
    f_ref = float(f_ref)
    if f_ref > f_best:
        return float(x_ref), f_ref
    return x_best, f_best


def find_root_bisect(f: Callable[[float], float], lo: float, hi: float, tol: Tolerance = DEFAULT_TOL) -> float:
    """Bisection for a sign change of ``f`` on [lo, hi].

    Stops when |f(x)| <= tol.abs_tol or the bracket is narrower than
    tol.abs_tol; returns the evaluated point with the smallest |f|.
    """
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise BracketError(f"f({lo})={f_lo} and f({hi})={f_hi} have the same sign")
    best_x, best_f = (lo, f_lo) if abs(f_lo) <= abs(f_hi) else (hi, f_hi)
    for _ in range(tol.max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if abs(f_mid) < abs(best_f):
            best_x, best_f = mid, f_mid
        if abs(f_mid) <= tol.abs_tol or hi - lo <= tol.abs_tol:
            return best_x
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    raise ConvergenceError(f"bisection did not converge in {tol.max_iter} steps")


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

def _quad(f, a, b, tol, points=None):
    val, err, info = integrate.quad(
        f, a, b, epsabs=tol.abs_tol, epsrel=tol.rel_tol, limit=tol.max_iter,
        points=points, full_output=1,
    )[:3]
    if err > max(tol.abs_tol, tol.rel_tol * abs(val)) * 10:
        raise ConvergenceError(f"quadrature on [{a}, {b}] failed: estimate {val}, error {err}")
    return val


def integrate_adaptive(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: Tolerance = DEFAULT_TOL,
    points=None,
    window: float = 1.0,
    max_panels: int = 4000,
) -> float:
    """Adaptive Gauss-Kronrod quadrature of ``f`` over [lo, hi].

    ``hi`` may be ``math.inf``: the range is covered by panels of doubling
    width starting at ``window`` and truncated once ``|f|`` at the panel
    edge falls below 1e-16 times the running total.
    """
    if hi < lo:
        raise DomainError(f"need lo <= hi, got [{lo}, {hi}]")
    if math.isfinite(hi):
        if hi == lo:
            return 0.0
        return _quad(f, lo, hi, tol, points)

    total = 0.0
    a, w = lo, window
    for _ in range(max_panels):
        b = a + w
        total += _quad(f, a, b, tol)
        if abs(f(b)) <= 1e-16 * abs(total):
            return total
        a, w = b, 2.0 * w
    raise ConvergenceError("semi-infinite quadrature did not decay within the panel budget")
