import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, stats

from newsvendor.errors import DivergenceError, DomainError
from newsvendor.model import (
    Bernoulli,
    DiscreteFinite,
    Exponential,
    Lognormal,
    Pareto,
    Policy,
    PolicyForm,
    ProblemParams,
    Uniform,
    critical_level,
    distribution_from_dict,
    expected_cost,
    newsvendor_loss,
    oracle_cost,
    saa_rank,
)
from oracles import discrete_oracle_cost

CONTINUOUS = [Uniform(0, 1), Uniform(2, 5), Exponential(1), Exponential(0.3), Lognormal(1, 1.805), Lognormal(0, 0.5),
              Pareto(1.5, 1), Pareto(3, 2)]


def _scipy(dist):
    if isinstance(dist, Uniform):
        return stats.uniform(dist.a, dist.b - dist.a)
    if isinstance(dist, Exponential):
        return stats.expon(scale=1 / dist.rate)
    if isinstance(dist, Lognormal):
        return stats.lognorm(dist.sigma_log, scale=math.exp(dist.mu_log))
    return stats.pareto(dist.alpha, scale=dist.x_m)


class TestProblemParams:
    def test_q(self):
        assert ProblemParams(9, 1).q == 0.9
        assert ProblemParams.from_q(0.7).q == 0.7

    @pytest.mark.parametrize("b,h", [(0, 1), (1, -1), (math.inf, 1), (math.nan, 1)])
    def test_invalid(self, b, h):
        with pytest.raises(DomainError):
            ProblemParams(b, h)

    @pytest.mark.parametrize("q", [0.0, 1.0, 1.5, -0.2])
    def test_invalid_q(self, q):
        with pytest.raises(DomainError):
            ProblemParams.from_q(q)

    def test_loss(self):
        p = ProblemParams(3, 2)
        np.testing.assert_allclose(newsvendor_loss([1, 4], [3, 1], p), [6.0, 6.0])


class TestPolicy:
    def test_saa_rank(self):
        assert saa_rank(10, 0.9) == 9
        assert saa_rank(20, 0.9) == 18
        assert saa_rank(3, 0.9) == 3
        assert saa_rank(7, 0.5) == 4
        # 0.7 * 10 is 7.000000000000001 in floating point
        assert saa_rank(10, 0.7) == 7

    @given(n=st.integers(1, 2000), q=st.floats(0.01, 0.99))
    def test_saa_rank_is_ceiling(self, n, q):
        r = saa_rank(n, q)
        assert 1 <= r <= n
        assert r >= q * n - 1e-6 and r - 1 < q * n + 1e-6

    def test_two_point(self):
        p = Policy.two_point(5, 3, 0.25)
        assert p.weights == (0.0, 0.75, 0.25, 0.0, 0.0)
        ranks, lam = p.support()
        np.testing.assert_array_equal(ranks, [2, 3])
        np.testing.assert_allclose(lam, [0.75, 0.25])

    def test_convex_mirrors_two_point(self):
        c = Policy.convex_combination(5, 3, 0.25)
        assert c.form is PolicyForm.CONVEX and not c.weights_exact
        assert c.as_two_point() == Policy.two_point(5, 3, 0.25)

    def test_single_and_saa(self):
        assert Policy.single(4, 2).weights == (0, 1, 0, 0)
        assert Policy.saa(10, ProblemParams.from_q(0.9)).rank == 9

    @pytest.mark.parametrize("ctor", [
        lambda: Policy.mixture([0.5, 0.6]),
        lambda: Policy.mixture([-0.1, 1.1]),
        lambda: Policy.single(3, 4),
        lambda: Policy.two_point(3, 1, 0.5),
        lambda: Policy.two_point(3, 2, 1.5),
        lambda: Policy(n=2, weights=(1.0,)),
    ])
    def test_invalid(self, ctor):
        with pytest.raises(DomainError):
            ctor()


class TestDistributions:
    @pytest.mark.parametrize("dist", CONTINUOUS, ids=repr)
    def test_against_scipy(self, dist):
        ref = _scipy(dist)
        xs = ref.ppf(np.linspace(0.01, 0.99, 23))
        np.testing.assert_allclose(dist.cdf(xs), ref.cdf(xs), rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(dist.sf(xs), ref.sf(xs), rtol=1e-10, atol=1e-14)
        ps = np.linspace(0.001, 0.999, 17)
        np.testing.assert_allclose(dist.quantile(ps), ref.ppf(ps), rtol=1e-10)
        assert dist.mean == pytest.approx(ref.mean(), rel=1e-12)

    @pytest.mark.parametrize("dist", CONTINUOUS, ids=repr)
    def test_expected_excess(self, dist):
        ref = _scipy(dist)
        for x in ref.ppf([0.2, 0.7, 0.95]):
            direct = integrate.quad(lambda y: ref.sf(y), x, np.inf, limit=400)[0]
            assert dist.expected_excess(x) == pytest.approx(direct, rel=1e-6)
        assert dist.expected_excess(-1.0) == pytest.approx(dist.mean + 1.0)

    def test_deep_tail_survival(self):
        # 1 - cdf would be 0 here; sf keeps the digits
        assert Exponential(1).sf(40.0) == pytest.approx(math.exp(-40), rel=1e-14)
        assert Pareto(1.5, 1).sf(1e8) == pytest.approx(1e-12, rel=1e-12)

    def test_discrete(self):
        d = DiscreteFinite((0.0, 1.0, 3.0), (0.2, 0.5, 0.3))
        np.testing.assert_allclose(d.cdf([-1, 0, 0.5, 1, 2.9, 3, 5]), [0, 0.2, 0.2, 0.7, 0.7, 1, 1])
        np.testing.assert_allclose(d.quantile([0.0, 0.2, 0.21, 0.7, 0.71, 1.0]), [0, 0, 1, 1, 3, 3])
        assert d.mean == pytest.approx(1.4)
        assert d.expected_excess(1.0) == pytest.approx(0.6)

    def test_bernoulli(self):
        b = Bernoulli(0.3)
        assert b.cdf(0.5) == pytest.approx(0.7)
        np.testing.assert_array_equal(b.quantile([0.1, 0.7, 0.71]), [0, 0, 1])
        assert b.as_discrete() == DiscreteFinite((0.0, 1.0), (0.7, 0.3))
        assert Bernoulli(0.0).as_discrete().points == (0.0,)

    def test_pareto_infinite_mean(self):
        with pytest.raises(DivergenceError):
            Pareto(1.0, 1.0).mean

    @pytest.mark.parametrize("bad", [
        lambda: Uniform(1, 1), lambda: Uniform(-1, 1), lambda: Exponential(0), lambda: Lognormal(0, 0),
        lambda: Pareto(0, 1), lambda: Bernoulli(1.2), lambda: DiscreteFinite((1.0, 0.5), (0.5, 0.5)),
        lambda: DiscreteFinite((0.0,), (0.9,)),
    ])
    def test_invalid(self, bad):
        with pytest.raises(DomainError):
            bad()

    @pytest.mark.parametrize("dist", CONTINUOUS + [DiscreteFinite((0.0, 2.0), (0.5, 0.5)), Bernoulli(0.4)], ids=repr)
    def test_dict_round_trip(self, dist):
        assert distribution_from_dict(dist.to_dict()) == dist

    def test_unknown_family(self):
        with pytest.raises(DomainError):
            distribution_from_dict({"family": "weibull", "params": {}})
        with pytest.raises(DomainError):
            distribution_from_dict({"family": "uniform", "params": {"lo": 0}})


class TestOracleCost:
    @pytest.mark.parametrize("q", [0.3, 0.7, 0.9])
    @pytest.mark.parametrize("dist", CONTINUOUS, ids=repr)
    def test_matches_direct_minimization(self, dist, q):
        params = ProblemParams.from_q(q)
        ref = _scipy(dist)
        x_star = critical_level(dist, params)
        assert x_star == pytest.approx(ref.ppf(q), rel=1e-10)

        def cost(x):
            under = integrate.quad(ref.sf, x, np.inf, limit=400)[0]
            return params.b * under + params.h * (x - ref.mean() + under)

        assert oracle_cost(dist, params) == pytest.approx(cost(x_star), rel=1e-7)
        assert oracle_cost(dist, params) == pytest.approx(expected_cost(dist, params, x_star), rel=1e-9)

    def test_bernoulli_closed_form(self):
        p = ProblemParams.from_q(0.8)
        for mu in (0.0, 0.1, 0.2, 0.5, 1.0):
            assert oracle_cost(Bernoulli(mu), p) == pytest.approx(min(0.2 * (1 - mu), 0.8 * mu), abs=1e-15)

    @given(masses=st.lists(st.integers(0, 5), min_size=2, max_size=5).filter(lambda m: sum(m) > 0),
           q=st.floats(0.05, 0.95))
    def test_discrete_matches_enumeration(self, masses, q):
        pts = np.arange(len(masses), dtype=float) ** 1.5
        w = np.asarray(masses, dtype=float) / sum(masses)
        d = DiscreteFinite(tuple(pts), tuple(w))
        p = ProblemParams.from_q(q)
        assert oracle_cost(d, p) == pytest.approx(discrete_oracle_cost(pts, w, p.b, p.h), abs=1e-12)
