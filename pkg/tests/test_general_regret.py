import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from newsvendor.bernoulli_regret import regret_vs_bernoulli, saa_policy, worst_case_regret
from newsvendor.errors import DivergenceError, DomainError, UnsupportedPolicyError
from newsvendor.general_regret import bernoulli_dominance_search, exact_policy_cost, relative_regret
from newsvendor.model import (
    Bernoulli,
    DiscreteFinite,
    Exponential,
    Lognormal,
    Pareto,
    Policy,
    ProblemParams,
    Uniform,
    oracle_cost,
)
from oracles import discrete_oracle_cost, discrete_policy_cost

Q9 = ProblemParams.from_q(0.9)


def os_cost_by_density(r, n, ref, params):
    """E[c(D_{r:n})] as an integral over the uniform order statistic U_{r:n} ~ Beta(r, n-r+1).

    With x = F^{-1}(u), E(D - x)^+ = int_u^1 (F^{-1}(v) - x) dv, so both
    layers live on (0, 1) and never touch the support edges of F.
    """
    b, h, mean = params.b, params.h, ref.mean()

    def c_f(u):
        x = ref.ppf(u)
        under = integrate.quad(lambda v: ref.ppf(v) - x, u, 1, limit=100, epsabs=1e-11)[0]
        return b * under + h * (x - mean + under)

    beta = stats.beta(r, n - r + 1)
    return integrate.quad(lambda u: c_f(u) * beta.pdf(u), 0, 1, limit=200, epsabs=1e-12)[0]


class TestBernoulliConsistency:
    @pytest.mark.parametrize("mu", [0.02, 0.1, 0.35, 0.8, 0.99])
    @pytest.mark.parametrize("n", [1, 7, 30])
    def test_matches_closed_form(self, n, mu):
        pol = saa_policy(n, Q9)
        got = exact_policy_cost(pol, Bernoulli(mu), Q9).relative_regret
        assert got == pytest.approx(regret_vs_bernoulli(pol, Q9, mu), rel=1e-8, abs=1e-12)

    def test_mixture(self):
        pol = Policy.mixture([0.1, 0.0, 0.3, 0.6])
        got = exact_policy_cost(pol, Bernoulli(0.2), Q9).relative_regret
        assert got == pytest.approx(regret_vs_bernoulli(pol, Q9, 0.2), rel=1e-9)


class TestDiscrete:
    @settings(max_examples=30)
    @given(masses=st.lists(st.integers(0, 4), min_size=2, max_size=4).filter(lambda m: sum(m) > 0),
           n=st.integers(1, 4), frac=st.floats(0, 1), q=st.floats(0.1, 0.9))
    def test_matches_tuple_enumeration(self, masses, n, frac, q):
        pts = np.cumsum(np.arange(1, len(masses) + 1, dtype=float)) - 1.0
        w = np.asarray(masses, float) / sum(masses)
        keep = w > 0
        dist = DiscreteFinite(tuple(pts[keep]), tuple(w[keep]))
        params = ProblemParams.from_q(q)
        r = 1 + min(n - 1, int(frac * n))
        pol = Policy.single(n, r)
        res = exact_policy_cost(pol, dist, params)
        ref = discrete_policy_cost(pol.weights, pts[keep], w[keep], params.b, params.h)
        assert res.policy_cost == pytest.approx(ref, rel=1e-10, abs=1e-12)
        assert res.oracle_cost == pytest.approx(discrete_oracle_cost(pts[keep], w[keep], params.b, params.h), abs=1e-12)

    def test_point_mass_zero_regret(self):
        res = exact_policy_cost(saa_policy(5, Q9), DiscreteFinite((5.0,), (1.0,)), Q9)
        assert res.policy_cost == 0.0 and res.oracle_cost == 0.0 and res.relative_regret == 0.0


class TestContinuous:
    @pytest.mark.parametrize("dist,ref", [
        (Uniform(0, 1), stats.uniform()),
        (Exponential(1), stats.expon()),
        (Lognormal(1, 0.8), stats.lognorm(0.8, scale=math.e)),
        (Pareto(3.0, 1), stats.pareto(3.0)),
    ], ids=["uniform", "exponential", "lognormal", "pareto"])
    @pytest.mark.parametrize("n,r", [(5, 5), (10, 9)])
    def test_against_order_statistic_density(self, dist, ref, n, r):
        got = exact_policy_cost(Policy.single(n, r), dist, Q9).policy_cost
        assert got == pytest.approx(os_cost_by_density(r, n, ref, Q9), rel=1e-6)

    def test_n1_closed_form(self):
        # D_{1:1} ~ F and is independent of D: E|X - D| style cost for Exponential(1)
        # E[b (D - X)^+ + h (X - D)^+] with X, D iid Exp(1) equals (b + h) / 2
        res = exact_policy_cost(Policy.single(1, 1), Exponential(1), Q9)
        assert res.policy_cost == pytest.approx(0.5 * (Q9.b + Q9.h), rel=1e-10)

    def test_mixture_linearity(self):
        d, params = Lognormal(0, 1.2), ProblemParams.from_q(0.8)
        a = exact_policy_cost(Policy.single(8, 6), d, params).policy_cost
        b = exact_policy_cost(Policy.single(8, 7), d, params).policy_cost
        mix = exact_policy_cost(Policy.two_point(8, 7, 0.3), d, params).policy_cost
        assert mix == pytest.approx(0.7 * a + 0.3 * b, rel=1e-10)

    @pytest.mark.parametrize("dist", [Uniform(0, 1), Exponential(2), Lognormal(1, 1.805), Pareto(1.5, 1)], ids=repr)
    def test_cost_at_least_oracle(self, dist):
        for n in (1, 4, 30, 200):
            res = exact_policy_cost(saa_policy(n, Q9), dist, Q9)
            assert res.policy_cost >= res.oracle_cost * (1 - 1e-10)
            assert res.oracle_cost == pytest.approx(oracle_cost(dist, Q9))

    def test_heavy_tail_large_n(self):
        # regret decreases towards zero even for an infinite-variance law
        vals = [exact_policy_cost(saa_policy(n, Q9), Pareto(1.5, 1), Q9).relative_regret for n in (50, 200, 800)]
        assert vals[0] > vals[1] > vals[2] > 0

    def test_below_bernoulli_worst_case(self):
        for n in (5, 20):
            pol = saa_policy(n, Q9)
            worst = worst_case_regret(pol, Q9).value
            for d in (Uniform(0, 1), Exponential(1), Lognormal(1, 1.805)):
                assert exact_policy_cost(pol, d, Q9).relative_regret <= worst


class TestErrors:
    def test_convex_rejected(self):
        with pytest.raises(UnsupportedPolicyError):
            exact_policy_cost(Policy.convex_combination(5, 4, 0.5), Uniform(0, 1), Q9)

    def test_infinite_mean(self):
        with pytest.raises(DivergenceError):
            exact_policy_cost(saa_policy(5, Q9), Pareto(1.0, 1), Q9)

    def test_relative_regret_conventions(self):
        assert relative_regret(0.0, 0.0) == 0.0
        assert relative_regret(1.0, 0.0) == math.inf
        assert relative_regret(3.0, 2.0) == 0.5


class TestDominanceSearch:
    def test_two_point_grid_is_bernoulli(self):
        pol = saa_policy(3, Q9)
        val, winner = bernoulli_dominance_search(pol, Q9, [0.0, 1.0], 0.01)
        mus = np.arange(1, 100) / 100
        assert val == pytest.approx(max(regret_vs_bernoulli(pol, Q9, mus)), rel=1e-10)
        assert val <= worst_case_regret(pol, Q9).value
        assert winner.points == (0.0, 1.0)

    def test_three_level_grid_dominated(self):
        for n in (2, 3):
            for r in range(1, n + 1):
                pol = Policy.single(n, r)
                val, _ = bernoulli_dominance_search(pol, Q9, [0.0, 0.5, 1.0], 0.1)
                assert val <= worst_case_regret(pol, Q9).value + 1e-9

    def test_point_masses_score_zero(self):
        val, winner = bernoulli_dominance_search(saa_policy(2, Q9), Q9, [3.0], 0.5)
        assert val == 0.0 and winner.points == (3.0,)

    def test_candidate_guard(self):
        with pytest.raises(DomainError):
            bernoulli_dominance_search(saa_policy(2, Q9), Q9, np.linspace(0, 1, 21), 0.05)

    @pytest.mark.parametrize("step", [0.0, 0.3, 1.5])
    def test_bad_step(self, step):
        with pytest.raises(DomainError):
            bernoulli_dominance_search(saa_policy(2, Q9), Q9, [0, 1], step)

    def test_bad_grid(self):
        with pytest.raises(DomainError):
            bernoulli_dominance_search(saa_policy(2, Q9), Q9, [-1.0, 1.0], 0.1)
