"""Monte Carlo estimation of the expected relative regret of data-driven
policies against a fixed demand distribution.

Replication m draws n in-sample demands, K out-of-sample demands and one
uniform for the policy's randomization. Every draw is addressed by
(seed, purpose, column, m) through a Philox counter-based stream, so the
estimate is identical however replications are chunked or scheduled, and
the same draws are reused across sample sizes and policies (common random
numbers). Demands come from uniforms by inverse transform.
"""

from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .bounds import ThresholdResult
from .errors import DomainError, HorizonError, ZeroOracleError
from .minimax import Degeneracy, derandomize, solve_minimax
from .model import DemandDistribution, Policy, PolicyForm, ProblemParams, distribution_from_dict, oracle_cost
from .parallel import thread_count

IN_SAMPLE, OUT_OF_SAMPLE, RANDOMIZATION = 0, 1, 2
CHUNK = 2048  # replications per work unit; a multiple of 4 (Philox block size)
_MASK64 = (1 << 64) - 1


class PolicyFamily(str, enum.Enum):
    SAA = "SAA"
    MINIMAX_CVX = "MinimaxCvx"


@dataclass(frozen=True)
class SimConfig:
    policy: Policy
    dist: DemandDistribution
    M: int = 100_000
    K: int = 1000
    seed: int = 0

    def __post_init__(self):
        for name in ("M", "K"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v}")
        if int(self.seed) != self.seed or not 0 <= self.seed <= _MASK64:
            raise DomainError(f"seed must be a 64-bit nonnegative integer, got {self.seed}")

    @property
    def n(self) -> int:
        return self.policy.n

    def to_dict(self) -> dict:
        pol = self.policy
        return {
            "M": self.M, "K": self.K, "seed": self.seed, "dist": self.dist.to_dict(),
            "policy": {"form": pol.form.value, "n": pol.n, "weights": list(pol.weights),
                       "rank": pol.rank, "k": pol.k, "gamma": pol.gamma},
        }

    @classmethod
    def from_dict(cls, d: dict, params: Optional[ProblemParams] = None) -> "SimConfig":
        """Accepts the ``to_dict`` layout; ``policy`` may also be given by form and (n, rank | k, gamma)."""
        try:
            dist = distribution_from_dict(d["dist"])
            pol = _policy_from_dict(d["policy"], params)
        except KeyError as exc:
            raise DomainError(f"simulation config is missing {exc}") from exc
        return cls(pol, dist, int(d.get("M", 100_000)), int(d.get("K", 1000)), int(d.get("seed", 0)))


def _policy_from_dict(p: dict, params: Optional[ProblemParams]) -> Policy:
    try:
        form = PolicyForm(p.get("form", "mixture"))
    except ValueError as exc:
        raise DomainError(f"unknown policy form {p.get('form')!r}; expected one of "
                          f"{[f.value for f in PolicyForm]}") from exc
    n = int(p["n"]) if "n" in p else None
    if form is PolicyForm.SAA:
        if params is None:
            raise DomainError("an SAA policy needs cost parameters")
        return Policy.saa(n, params)
    if form is PolicyForm.SINGLE_OS:
        return Policy.single(n, int(p["rank"]))
    if form is PolicyForm.TWO_POINT:
        return Policy.two_point(n, int(p["k"]), float(p["gamma"]))
    if form is PolicyForm.CONVEX:
        return Policy.convex_combination(n, int(p["k"]), float(p["gamma"]))
    return Policy.mixture(p["weights"])


@dataclass(frozen=True)
class SimEstimate:
    mean_regret: float
    std_error: float
    ci95: tuple
    M_used: int
    K_used: int
    seed: int = 0

    def to_dict(self) -> dict:
        def clean(v):
            return None if not math.isfinite(v) else v

        return {"mean": clean(self.mean_regret), "std_error": clean(self.std_error),
                "ci95": [clean(v) for v in self.ci95], "M": self.M_used, "K": self.K_used, "seed": self.seed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class PairedEstimate:
    """Difference a - b of two regret estimates computed on shared draws."""

    a: SimEstimate
    b: SimEstimate
    mean_diff: float
    std_error: float


# ---------------------------------------------------------------------------
# Random streams
# ---------------------------------------------------------------------------

def uniforms(seed: int, purpose: int, column: int, start: int, size: int) -> np.ndarray:
    """Uniforms for replications start..start+size-1 of one stream; ``start`` % 4 == 0."""
    if start % 4:
        raise DomainError("stream offsets must be multiples of 4")
    bg = np.random.Philox(key=np.array([seed & _MASK64, (purpose << 32) | column], dtype=np.uint64))
    bg.advance(start // 4)
    return np.random.Generator(bg).random(size)


def _uniform_block(seed, purpose, columns, start, size) -> np.ndarray:
    out = np.empty((size, columns))
    for j in range(columns):
        out[:, j] = uniforms(seed, purpose, j, start, size)
    return out


# ---------------------------------------------------------------------------
# Decisions
# ---------------------------------------------------------------------------

def decide(policy: Policy, samples: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Order quantity per row of ``samples`` (rows x n); ``u`` drives randomization."""
    n = policy.n
    if samples.shape[1] != n:
        raise DomainError(f"policy expects {n} samples, got {samples.shape[1]}")
    if policy.form in (PolicyForm.SINGLE_OS, PolicyForm.SAA):
        r = policy.rank - 1
        return np.partition(samples, r, axis=1)[:, r]
    if policy.form is PolicyForm.CONVEX:
        k = policy.k - 1
        part = np.partition(samples, [k - 1, k], axis=1)
        return policy.gamma * part[:, k] + (1.0 - policy.gamma) * part[:, k - 1]
    ranks, lam = policy.support()
    if ranks.size == 1:
        r = int(ranks[0]) - 1
        return np.partition(samples, r, axis=1)[:, r]
    cum = np.cumsum(lam)
    cum[-1] = 1.0
    pick = ranks[np.minimum(np.searchsorted(cum, u, side="right"), ranks.size - 1)] - 1
    part = np.partition(samples, ranks - 1, axis=1)
    return np.take_along_axis(part, pick[:, None], axis=1)[:, 0]


@lru_cache(maxsize=4096)
def family_policy(family: PolicyFamily | str, n: int, params: ProblemParams) -> Policy:
    """SAA, or the derandomized minimax policy (a single order statistic at degenerate n)."""
    family = PolicyFamily(family)
    if family is PolicyFamily.SAA:
        return Policy.saa(n, params)
    sol = solve_minimax(n, params)
    if sol.degenerate is not Degeneracy.NONE:
        return Policy.single(n, sol.k)
    return derandomize(sol, n)


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------

class _Moments:
    """Running count / mean / centred second moment, merged chunk by chunk."""

    def __init__(self, arms: int):
        self.count = 0
        self.mean = np.zeros(arms)
        self.m2 = np.zeros(arms)

    def add(self, block: np.ndarray) -> None:
        nb = block.shape[0]
        mb = block.mean(axis=0)
        m2b = ((block - mb) ** 2).sum(axis=0)
        tot = self.count + nb
        delta = mb - self.mean
        self.mean = self.mean + delta * (nb / tot)
        self.m2 = self.m2 + m2b + delta**2 * (self.count * nb / tot)
        self.count = tot

    def std_error(self) -> np.ndarray:
        if self.count < 2:
            return np.full_like(self.mean, math.nan)
        return np.sqrt(self.m2 / (self.count - 1) / self.count)


def _chunk_regrets(arms, dist, params, opt, cfg_seed, K, start, size) -> np.ndarray:
    """(size x len(arms)) per-replication relative regrets for one chunk."""
    n_max = max(p.n for p in arms)
    insample = dist.quantile(_uniform_block(cfg_seed, IN_SAMPLE, n_max, start, size))
    outsample = np.sort(dist.quantile(_uniform_block(cfg_seed, OUT_OF_SAMPLE, K, start, size)), axis=1)
    prefix = np.concatenate([np.zeros((size, 1)), np.cumsum(outsample, axis=1)], axis=1)
    u = uniforms(cfg_seed, RANDOMIZATION, 0, start, size)

    x = np.column_stack([decide(p, insample[:, : p.n], u) for p in arms])  # (size, arms)
    below = np.empty_like(x, dtype=np.int64)
    for i in range(size):
        below[i] = np.searchsorted(outsample[i], x[i], side="right")
    s_below = np.take_along_axis(prefix, below, axis=1)
    s_total = prefix[:, -1:]
    over = below * x - s_below  # sum of (x - d) over d <= x
    under = (s_total - s_below) - (K - below) * x  # sum of (d - x) over d > x
    cost = (params.b * np.maximum(under, 0.0) + params.h * np.maximum(over, 0.0)) / K
    return cost / opt - 1.0


def _run(arms: Sequence[Policy], dist, params, M, K, seed, pairs=(), progress=None):
    opt = oracle_cost(dist, params)
    if not opt > 0:
        raise ZeroOracleError("the oracle cost is zero (point-mass demand); relative regret is undefined")
    starts = list(range(0, M, CHUNK))
    moments = _Moments(len(arms))
    pair_moments = _Moments(len(pairs)) if pairs else None

    def work(start):
        return _chunk_regrets(arms, dist, params, opt, seed, K, start, min(CHUNK, M - start))

    workers = thread_count()
    with ThreadPoolExecutor(workers) if workers > 1 and len(starts) > 1 else _Serial() as pool:
        for idx, block in enumerate(pool.map(work, starts)):
            moments.add(block)
            if pairs:
                pair_moments.add(np.column_stack([block[:, a] - block[:, b] for a, b in pairs]))
            if progress:
                progress(idx + 1, len(starts))
    return moments, pair_moments


class _Serial:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False

    @staticmethod
    def map(fn, items):
        return map(fn, items)


def _estimate(moments: _Moments, i: int, K: int, seed: int) -> SimEstimate:
    mean = float(moments.mean[i])
    se = float(moments.std_error()[i])
    return SimEstimate(mean, se, (mean - 1.96 * se, mean + 1.96 * se), moments.count, K, seed)


def simulate_regret(cfg: SimConfig, params: ProblemParams, progress=None) -> SimEstimate:
    """Estimate the expected relative regret of ``cfg.policy`` against ``cfg.dist``."""
    moments, _ = _run([cfg.policy], cfg.dist, params, cfg.M, cfg.K, cfg.seed, progress=progress)
    return _estimate(moments, 0, cfg.K, cfg.seed)


def simulate_many(policies: Sequence[Policy], dist: DemandDistribution, params: ProblemParams,
                  M: int = 100_000, K: int = 1000, seed: int = 0, progress=None) -> list[SimEstimate]:
    """Estimates for several policies (any n) on one shared set of draws."""
    SimConfig(policies[0], dist, M, K, seed)  # validation
    moments, _ = _run(list(policies), dist, params, M, K, seed, progress=progress)
    return [_estimate(moments, i, K, seed) for i in range(len(policies))]


def simulate_paired(a: Policy, b: Policy, dist: DemandDistribution, params: ProblemParams,
                    M: int = 100_000, K: int = 1000, seed: int = 0) -> PairedEstimate:
    """Regret difference a - b on common draws, with its paired standard error."""
    SimConfig(a, dist, M, K, seed)
    moments, diff = _run([a, b], dist, params, M, K, seed, pairs=[(0, 1)])
    return PairedEstimate(_estimate(moments, 0, K, seed), _estimate(moments, 1, K, seed),
                          float(diff.mean[0]), float(diff.std_error()[0]))


# ---------------------------------------------------------------------------
# Thresholds
# ---------------------------------------------------------------------------

@dataclass
class SimCurve:
    """Estimates by sample size for one policy family, filled in batches."""

    family: PolicyFamily
    dist: DemandDistribution
    params: ProblemParams
    M: int = 100_000
    K: int = 1000
    seed: int = 0
    estimates: dict = field(default_factory=dict)

    def extend(self, n_values: Sequence[int], progress=None) -> None:
        todo = [n for n in n_values if n not in self.estimates]
        if not todo:
            return
        pols = [family_policy(self.family, n, self.params) for n in todo]
        for n, est in zip(todo, simulate_many(pols, self.dist, self.params, self.M, self.K, self.seed, progress)):
            self.estimates[n] = est


class ThresholdRule(str, enum.Enum):
    EVENTUALLY = "eventually"  # smallest m with the bound <= tau for every n in [m, n_cap]
    FIRST = "first"  # first n with the bound <= tau


def simulate_thresholds(family: PolicyFamily | str, dist: DemandDistribution, params: ProblemParams,
                        taus: Sequence[float], M: int = 100_000, K: int = 1000, seed: int = 0,
                        n_cap: int = 200, rule: ThresholdRule | str = ThresholdRule.EVENTUALLY,
                        batch: int = 200, progress: Optional[Callable[[str], None]] = None,
                        strict: bool = True) -> list[ThresholdResult]:
    """Sample sizes at which the 95% upper confidence bound reaches each tau.

    Every n in 1..n_cap is estimated on one shared set of draws (in batches
    of ``batch`` sizes, which does not change any estimate). With the default
    rule the bound must stay <= tau from m up to ``n_cap``, mirroring the
    "for all n >= m" definition of the exact thresholds. A target that is
    not reached raises HorizonError, or gives ``n_star=None`` when
    ``strict`` is False.
    """
    family, rule = PolicyFamily(family), ThresholdRule(rule)
    for tau in taus:
        if not tau > 0:
            raise DomainError(f"tau must be positive, got {tau}")
    if int(n_cap) != n_cap or n_cap < 1:
        raise DomainError(f"n_cap must be a positive integer, got {n_cap}")
    curve = SimCurve(family, dist, params, M, K, seed)
    for lo in range(1, n_cap + 1, batch):
        hi = min(n_cap, lo + batch - 1)
        if progress:
            progress(f"{family.value} {dist.family}: n={lo}..{hi}")
        curve.extend(range(lo, hi + 1))
    upper = [curve.estimates[n].ci95[1] for n in range(1, n_cap + 1)]

    out = []
    for tau in taus:
        if rule is ThresholdRule.FIRST:
            hits = [n for n in range(1, n_cap + 1) if upper[n - 1] <= tau]
            if not hits:
                if strict:
                    raise HorizonError(f"{family.value} upper confidence bound stays above {tau} up to n={n_cap}")
                out.append(ThresholdResult(tau, family, None, n_cap, n_cap))
                continue
            out.append(ThresholdResult(tau, family, hits[0], n_cap, hits[0]))
            continue
        if not upper[-1] <= tau:
            if strict:
                raise HorizonError(f"{family.value} upper confidence bound at the horizon n={n_cap} is above {tau}")
            out.append(ThresholdResult(tau, family, None, n_cap, n_cap))
            continue
        m = n_cap
        while m > 1 and upper[m - 2] <= tau:
            m -= 1
        out.append(ThresholdResult(tau, family, m, n_cap, n_cap))
    return out


def simulate_threshold(family: PolicyFamily | str, dist: DemandDistribution, params: ProblemParams,
                       tau: float, M: int = 100_000, K: int = 1000, seed: int = 0, n_cap: int = 200,
                       rule: ThresholdRule | str = ThresholdRule.EVENTUALLY) -> ThresholdResult:
    return simulate_thresholds(family, dist, params, [tau], M, K, seed, n_cap, rule)[0]


__all__ = [
    "PolicyFamily", "SimConfig", "SimEstimate", "PairedEstimate", "SimCurve", "uniforms", "decide",
    "family_policy", "simulate_regret", "simulate_many", "simulate_paired", "simulate_thresholds",
    "simulate_threshold", "ThresholdRule",
]
