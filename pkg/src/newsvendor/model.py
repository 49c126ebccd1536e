"""Core domain types: cost parameters, order-statistic policies, demand
distributions and the full-information (oracle) newsvendor cost."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special

from .errors import DivergenceError, DomainError
from .numerics import Tolerance, integrate_adaptive


# ---------------------------------------------------------------------------
# Cost parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProblemParams:
    """Underage cost ``b`` and overage cost ``h``; ``q = b / (b + h)``."""

    b: float
    h: float

    def __post_init__(self):
        for name in ("b", "h"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be a finite positive number, got {v!r}")

    @classmethod
    def from_q(cls, q: float) -> "ProblemParams":
        if not (0.0 < q < 1.0):
            raise DomainError(f"critical quantile must lie in (0, 1), got {q}")
        return cls(b=float(q), h=float(1.0 - q))

    @property
    def q(self) -> float:
        # b / (b + h) can round to exactly q for the from_q constructor; keep it that way
        if self.b + self.h == 1.0:
            return self.b
        return self.b / (self.b + self.h)


def newsvendor_loss(x, d, params: ProblemParams):
    """Realized cost b (d - x)^+ + h (x - d)^+."""
    diff = np.asarray(d, dtype=float) - np.asarray(x, dtype=float)
    return params.b * np.maximum(diff, 0.0) + params.h * np.maximum(-diff, 0.0)


# ---------------------------------------------------------------------------
# Policies
# ---------------------------------------------------------------------------

class PolicyForm(str, enum.Enum):
    MIXTURE = "mixture"
    SINGLE_OS = "single_os"
    SAA = "saa"
    TWO_POINT = "two_point"
    CONVEX = "convex_combination"


@dataclass(frozen=True)
class Policy:
    """A mixture of order statistics over ranks 1..n.

    ``weights[i-1]`` is the probability of prescribing the i-th smallest
    sample. ``CONVEX`` policies instead prescribe the deterministic level
    ``gamma * D_{k:n} + (1 - gamma) * D_{k-1:n}``; their weights mirror the
    two-point policy with the same (k, gamma) and are not a description of
    the decision rule (``weights_exact`` is False).
    """

    n: int
    weights: tuple
    form: PolicyForm = PolicyForm.MIXTURE
    rank: Optional[int] = None
    k: Optional[int] = None
    gamma: Optional[float] = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.n,):
            raise DomainError(f"expected {self.n} weights, got shape {w.shape}")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise DomainError("weights must be a probability vector")
        object.__setattr__(self, "weights", tuple(float(v) for v in w))

    # constructors ---------------------------------------------------------

    @classmethod
    def mixture(cls, weights) -> "Policy":
        w = tuple(float(v) for v in weights)
        return cls(n=len(w), weights=w)

    @classmethod
    def single(cls, n: int, rank: int) -> "Policy":
        _check_rank(n, rank, 1)
        w = [0.0] * n
        w[rank - 1] = 1.0
        return cls(n=n, weights=tuple(w), form=PolicyForm.SINGLE_OS, rank=rank)

    @classmethod
    def saa(cls, n: int, params: ProblemParams) -> "Policy":
        rank = saa_rank(n, params.q)
        w = [0.0] * n
        w[rank - 1] = 1.0
        return cls(n=n, weights=tuple(w), form=PolicyForm.SAA, rank=rank)

    @classmethod
    def two_point(cls, n: int, k: int, gamma: float) -> "Policy":
        _check_rank(n, k, 2)
        if not 0.0 <= gamma <= 1.0:
            raise DomainError(f"gamma must lie in [0, 1], got {gamma}")
        w = [0.0] * n
        w[k - 1] = gamma
        w[k - 2] += 1.0 - gamma
        return cls(n=n, weights=tuple(w), form=PolicyForm.TWO_POINT, k=k, gamma=float(gamma))

    @classmethod
    def convex_combination(cls, n: int, k: int, gamma: float) -> "Policy":
        tp = cls.two_point(n, k, gamma)
        return cls(n=n, weights=tp.weights, form=PolicyForm.CONVEX, k=k, gamma=float(gamma))

    # helpers --------------------------------------------------------------

    @property
    def weights_exact(self) -> bool:
        return self.form is not PolicyForm.CONVEX

    @property
    def lam(self) -> np.ndarray:
        return np.asarray(self.weights)

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        """Ranks with positive weight and their weights."""
        lam = self.lam
        ranks = np.flatnonzero(lam > 0) + 1
        return ranks, lam[ranks - 1]

    def as_two_point(self) -> "Policy":
        if self.k is None:
            raise DomainError("policy has no (k, gamma) parameters")
        return Policy.two_point(self.n, self.k, self.gamma)

    def describe(self) -> str:
        if self.form in (PolicyForm.SINGLE_OS, PolicyForm.SAA):
            return f"{self.form.value}(n={self.n}, rank={self.rank})"
        if self.form in (PolicyForm.TWO_POINT, PolicyForm.CONVEX):
            return f"{self.form.value}(n={self.n}, k={self.k}, gamma={self.gamma:.12g})"
        return f"mixture(n={self.n})"


def _check_rank(n, r, lowest):
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if int(r) != r or not lowest <= r <= n:
        raise DomainError(f"rank must lie in {lowest}..{n}, got {r}")


def saa_rank(n: int, q: float) -> int:
    """ceil(q n), guarded against q*n landing a hair above an integer."""
    qn = q * n
    r = math.ceil(qn)
    if r - 1 >= 1 and abs(qn - (r - 1)) <= 1e-9 * max(1.0, qn):
        r -= 1
    return max(1, min(n, r))


# ---------------------------------------------------------------------------
# Demand distributions
# ---------------------------------------------------------------------------

class DemandDistribution:
    """Base class. Subclasses supply cdf, quantile, mean and
    ``expected_excess(x) = E[(D - x)^+]``."""

    family: str = ""

    # support [lower, upper]; upper may be inf
    lower: float = 0.0
    upper: float = math.inf

    def cdf(self, x):
        raise NotImplementedError

    def sf(self, x):
        """Survival function 1 - F(x); subclasses override it where that loses digits."""
        out = 1.0 - np.asarray(self.cdf(x), dtype=float)
        return out if np.ndim(out) else float(out)

    def quantile(self, p):
        raise NotImplementedError

    @property
    def mean(self) -> float:
        raise NotImplementedError

    def expected_excess(self, x):
        raise NotImplementedError

    def params_dict(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"family": self.family, "params": self.params_dict()}

    @property
    def is_discrete(self) -> bool:
        return False

    def breakpoints(self) -> list:
        """Interior points where the cdf changes character (for quadrature)."""
        return []


@dataclass(frozen=True)
class Bernoulli(DemandDistribution):
    mu: float
    family = "bernoulli"

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise DomainError(f"Bernoulli mean must lie in [0, 1], got {self.mu}")

    @property
    def upper(self):
        return 1.0

    def as_discrete(self) -> "DiscreteFinite":
        if self.mu == 0.0:
            return DiscreteFinite((0.0,), (1.0,))
        if self.mu == 1.0:
            return DiscreteFinite((1.0,), (1.0,))
        return DiscreteFinite((0.0, 1.0), (1.0 - self.mu, self.mu))

    @property
    def is_discrete(self):
        return True

    @property
    def points(self):
        return self.as_discrete().points

    @property
    def masses(self):
        return self.as_discrete().masses

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x < 0, 0.0, np.where(x < 1, 1.0 - self.mu, 1.0))
        return out if out.ndim else float(out)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        out = np.where(p <= 1.0 - self.mu, 0.0, 1.0)
        return out if out.ndim else float(out)

    @property
    def mean(self):
        return float(self.mu)

    def expected_excess(self, x):
        return self.as_discrete().expected_excess(x)

    def params_dict(self):
        return {"mu": self.mu}


@dataclass(frozen=True)
class Uniform(DemandDistribution):
    a: float = 0.0
    b: float = 1.0
    family = "uniform"

    def __post_init__(self):
        if not (0.0 <= self.a < self.b < math.inf):
            raise DomainError(f"Uniform needs 0 <= a < b < inf, got ({self.a}, {self.b})")

    @property
    def lower(self):
        return self.a

    @property
    def upper(self):
        return self.b

    def cdf(self, x):
        out = np.clip((np.asarray(x, dtype=float) - self.a) / (self.b - self.a), 0.0, 1.0)
        return out if out.ndim else float(out)

    def quantile(self, p):
        out = self.a + np.asarray(p, dtype=float) * (self.b - self.a)
        return out if np.ndim(out) else float(out)

    @property
    def mean(self):
        return 0.5 * (self.a + self.b)

    def expected_excess(self, x):
        x = np.asarray(x, dtype=float)
        inside = (self.b - np.clip(x, self.a, self.b)) ** 2 / (2.0 * (self.b - self.a))
        out = np.where(x <= self.a, self.mean - x, inside)
        return out if out.ndim else float(out)

    def params_dict(self):
        return {"a": self.a, "b": self.b}


@dataclass(frozen=True)
class Exponential(DemandDistribution):
    rate: float = 1.0
    family = "exponential"

    def __post_init__(self):
        if not (0.0 < self.rate < math.inf):
            raise DomainError(f"Exponential rate must be positive, got {self.rate}")

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x <= 0, 0.0, -np.expm1(-self.rate * np.maximum(x, 0.0)))
        return out if out.ndim else float(out)

    def sf(self, x):
        out = np.exp(-self.rate * np.maximum(np.asarray(x, dtype=float), 0.0))
        return out if out.ndim else float(out)

    def quantile(self, p):
        out = -np.log1p(-np.asarray(p, dtype=float)) / self.rate
        return out if np.ndim(out) else float(out)

    @property
    def mean(self):
        return 1.0 / self.rate

    def expected_excess(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x <= 0, self.mean - x, np.exp(-self.rate * np.maximum(x, 0.0)) / self.rate)
        return out if out.ndim else float(out)

    def params_dict(self):
        return {"rate": self.rate}


@dataclass(frozen=True)
class Lognormal(DemandDistribution):
    """exp(N(mu_log, sigma_log^2))."""

    mu_log: float = 0.0
    sigma_log: float = 1.0
    family = "lognormal"

    def __post_init__(self):
        if not (0.0 < self.sigma_log < math.inf) or not math.isfinite(self.mu_log):
            raise DomainError(f"bad lognormal parameters ({self.mu_log}, {self.sigma_log})")

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            z = (np.log(np.maximum(x, 0.0)) - self.mu_log) / self.sigma_log
        out = np.where(x <= 0, 0.0, special.ndtr(z))
        return out if out.ndim else float(out)

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            z = (np.log(np.maximum(x, 0.0)) - self.mu_log) / self.sigma_log
        out = np.where(x <= 0, 1.0, special.ndtr(-z))
        return out if out.ndim else float(out)

    def quantile(self, p):
        out = np.exp(self.mu_log + self.sigma_log * special.ndtri(np.asarray(p, dtype=float)))
        return out if np.ndim(out) else float(out)

    @property
    def mean(self):
        return math.exp(self.mu_log + 0.5 * self.sigma_log**2)

    def expected_excess(self, x):
        x = np.asarray(x, dtype=float)
        s = self.sigma_log
        with np.errstate(divide="ignore"):
            d1 = (self.mu_log + s * s - np.log(np.maximum(x, 1e-300))) / s
        inside = self.mean * special.ndtr(d1) - x * special.ndtr(d1 - s)
        out = np.where(x <= 0, self.mean - x, inside)
        return out if out.ndim else float(out)

    def params_dict(self):
        return {"mu_log": self.mu_log, "sigma_log": self.sigma_log}


@dataclass(frozen=True)
class Pareto(DemandDistribution):
    """Type-I Pareto with shape ``alpha`` and scale ``x_m``."""

    alpha: float = 1.5
    x_m: float = 1.0
    family = "pareto"

    def __post_init__(self):
        if not (self.x_m > 0 and self.alpha > 0):
            raise DomainError(f"bad Pareto parameters ({self.alpha}, {self.x_m})")

    @property
    def lower(self):
        return self.x_m

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x < self.x_m, 0.0, -np.expm1(-self.alpha * np.log(np.maximum(x, self.x_m) / self.x_m)))
        return out if out.ndim else float(out)

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.exp(-self.alpha * np.log(np.maximum(x, self.x_m) / self.x_m))
        return out if out.ndim else float(out)

    def quantile(self, p):
        out = self.x_m * np.exp(-np.log1p(-np.asarray(p, dtype=float)) / self.alpha)
        return out if np.ndim(out) else float(out)

    @property
    def mean(self):
        if self.alpha <= 1.0:
            raise DivergenceError(f"Pareto with alpha={self.alpha} has an infinite mean")
        return self.alpha * self.x_m / (self.alpha - 1.0)

    def expected_excess(self, x):
        a, xm = self.alpha, self.x_m
        mean = self.mean
        x = np.asarray(x, dtype=float)
        tail = xm * np.exp((a - 1.0) * np.log(xm / np.maximum(x, xm))) / (a - 1.0)
        out = np.where(x <= xm, mean - x, tail)
        return out if out.ndim else float(out)

    def params_dict(self):
        return {"alpha": self.alpha, "x_m": self.x_m}


@dataclass(frozen=True)
class DiscreteFinite(DemandDistribution):
    points: tuple
    masses: tuple
    family = "discrete"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        ms = np.asarray(self.masses, dtype=float)
        if pts.ndim != 1 or pts.shape != ms.shape or pts.size == 0:
            raise DomainError("points and masses must be equal-length nonempty vectors")
        if np.any(pts < 0) or np.any(np.diff(pts) <= 0):
            raise DomainError("support points must be nonnegative and strictly increasing")
        if np.any(ms < 0) or abs(ms.sum() - 1.0) > 1e-12:
            raise DomainError("masses must form a probability vector")
        object.__setattr__(self, "points", tuple(float(v) for v in pts))
        object.__setattr__(self, "masses", tuple(float(v) for v in ms))

    @property
    def is_discrete(self):
        return True

    @property
    def lower(self):
        return self.points[0]

    @property
    def upper(self):
        return self.points[-1]

    def _cum(self):
        c = np.cumsum(self.masses)
        c[-1] = 1.0
        return c

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(np.asarray(self.points), x, side="right")
        cum = np.concatenate([[0.0], self._cum()])
        out = cum[idx]
        return out if out.ndim else float(out)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        idx = np.searchsorted(self._cum(), p, side="left")
        out = np.asarray(self.points)[np.minimum(idx, len(self.points) - 1)]
        return out if out.ndim else float(out)

    @property
    def mean(self):
        return float(np.dot(self.points, self.masses))

    def expected_excess(self, x):
        x = np.asarray(x, dtype=float)
        pts, ms = np.asarray(self.points), np.asarray(self.masses)
        out = (np.maximum(pts - x[..., None], 0.0) * ms).sum(axis=-1)
        return out if out.ndim else float(out)

    def params_dict(self):
        return {"points": list(self.points), "masses": list(self.masses)}


_FAMILIES = {
    "bernoulli": Bernoulli,
    "uniform": Uniform,
    "exponential": Exponential,
    "lognormal": Lognormal,
    "pareto": Pareto,
    "discrete": DiscreteFinite,
}


def distribution_from_dict(spec: dict) -> DemandDistribution:
    """Inverse of ``DemandDistribution.to_dict``."""
    try:
        family = spec["family"].lower()
        cls = _FAMILIES[family]
    except (KeyError, AttributeError) as exc:
        raise DomainError(f"unknown distribution spec {spec!r}") from exc
    params = dict(spec.get("params", {}))
    try:
        if family == "discrete":
            params = {"points": tuple(params["points"]), "masses": tuple(params["masses"])}
        return cls(**params)
    except (KeyError, TypeError) as exc:
        raise DomainError(f"bad parameters for {family}: {params!r}") from exc


def cdf(dist: DemandDistribution, x):
    return dist.cdf(x)


def quantile(dist: DemandDistribution, p):
    """Generalized inverse min{x >= 0 : F(x) >= p}."""
    return dist.quantile(p)


# ---------------------------------------------------------------------------
# Costs
# ---------------------------------------------------------------------------

def expected_cost(dist: DemandDistribution, params: ProblemParams, x):
    """c_F(x) = b E[(D-x)^+] + h E[(x-D)^+]."""
    x = np.asarray(x, dtype=float)
    excess = dist.expected_excess(x)
    out = (params.b + params.h) * excess + params.h * (x - dist.mean)
    out = np.maximum(out, 0.0)
    return out if np.ndim(out) else float(out)


def critical_level(dist: DemandDistribution, params: ProblemParams) -> float:
    """x*_F = min{x >= 0 : F(x) >= q}."""
    return float(max(dist.quantile(params.q), 0.0))


_ORACLE_TOL = Tolerance(abs_tol=1e-13, rel_tol=1e-11, max_iter=500)


def oracle_cost(dist: DemandDistribution, params: ProblemParams) -> float:
    """opt(F) = (b+h) * integral of min{(1-q) F(y), q (1 - F(y))} dy."""
    q = params.q
    scale = params.b + params.h
    mean = dist.mean  # raises DivergenceError for infinite-mean inputs
    if not math.isfinite(mean):
        raise DivergenceError("distribution has an infinite mean")

    if isinstance(dist, Bernoulli):
        mu = dist.mu
        return scale * min((1.0 - q) * (1.0 - mu), q * mu)
    if isinstance(dist, Exponential):
        x = critical_level(dist, params)
        # (1-q) * int_0^x F + q * E[(D-x)^+]
        int_f = x - dist.cdf(x) / dist.rate
        return scale * ((1.0 - q) * int_f + q * dist.expected_excess(x))
    if isinstance(dist, Uniform):
        x = critical_level(dist, params)
        int_f = (x - dist.a) ** 2 / (2.0 * (dist.b - dist.a))
        return scale * ((1.0 - q) * int_f + q * dist.expected_excess(x))
    if isinstance(dist, DiscreteFinite):
        pts = np.asarray(dist.points)
        f_left = dist._cum()[:-1]  # F on [pts[j], pts[j+1])
        widths = np.diff(pts)
        integrand = np.minimum((1.0 - q) * f_left, q * (1.0 - f_left))
        return float(scale * np.dot(widths, integrand))

    # Lognormal / Pareto: quadrature below x*, where the integrand is
    # (1-q) F(y), and the exact tail q * E[(D - x*)^+] above it.
    x = critical_level(dist, params)
    lo = dist.lower
    body = 0.0
    if x > lo:
        body = integrate_adaptive(lambda y: float(dist.cdf(y)), lo, x, _ORACLE_TOL)
    return float(scale * ((1.0 - q) * body + q * dist.expected_excess(x)))


@dataclass(frozen=True)
class RegretEvaluation:
    value: float
    argmax_mu: Optional[float] = None
    side: str = "full"

    def __post_init__(self):
        if not self.value >= 0:
            raise DomainError(f"regret must be nonnegative, got {self.value}")
        if self.argmax_mu is not None and not 0.0 <= self.argmax_mu <= 1.0:
            raise DomainError(f"argmax_mu outside [0, 1]: {self.argmax_mu}")
