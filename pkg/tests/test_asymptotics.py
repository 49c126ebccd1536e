import math

import numpy as np
import pytest
from scipy import optimize, stats

from newsvendor.asymptotics import asymptotic_convergence_check, c_star, h_max, h_minus, h_plus
from newsvendor.errors import DomainError
from newsvendor.model import ProblemParams

Q5 = ProblemParams.from_q(0.5)
Q9 = ProblemParams.from_q(0.9)


def gauss_max():
    res = optimize.minimize_scalar(lambda p: -p * stats.norm.sf(p), bounds=(0, 5), method="bounded",
                                   options={"xatol": 1e-12})
    return res.x, -res.fun


class TestCStar:
    def test_bracket_and_argmax(self):
        p_ref, v_ref = gauss_max()
        prof = c_star(Q9)
        assert prof.bracket_max == pytest.approx(v_ref, abs=1e-12)
        assert prof.p_star == pytest.approx(p_ref, abs=1e-6)
        assert round(prof.bracket_max, 2) == 0.17

    def test_first_order_condition(self):
        # d/dp p (1 - Phi(p)) = 0  <=>  1 - Phi(p) = p phi(p); a flat maximum
        # pins the argmax only to about sqrt(eps)
        p = c_star(Q5).p_star
        assert stats.norm.sf(p) == pytest.approx(p * stats.norm.pdf(p), abs=1e-7)

    @pytest.mark.parametrize("q", [0.1, 0.3, 0.6, 0.95])
    def test_symmetric_in_q(self, q):
        assert c_star(ProblemParams.from_q(q)).c_star == pytest.approx(c_star(ProblemParams.from_q(1 - q)).c_star)

    def test_scaling(self):
        prof = c_star(Q9)
        assert prof.c_star == pytest.approx(prof.bracket_max / math.sqrt(0.09))
        np.testing.assert_allclose(prof.approximation(np.array([1, 4])), [prof.c_star, prof.c_star / 2])


class TestH:
    def test_mirror(self):
        d = np.linspace(0, 2, 9)
        np.testing.assert_allclose(h_minus(d, 0.3, Q9), h_plus(d, -0.3, Q9))
        np.testing.assert_allclose(h_minus(d, 0.0, Q9), h_plus(d, 0.0, Q9))

    @pytest.mark.parametrize("q", [0.5, 0.8])
    def test_max_at_zero_shift_is_c_star(self, q):
        params = ProblemParams.from_q(q)
        assert h_max(0.0, params) == pytest.approx(c_star(params).c_star, abs=1e-8)

    def test_zero_shift_is_best(self):
        ells = np.linspace(-0.5, 0.5, 21)
        vals = [h_max(e, Q9) for e in ells]
        assert int(np.argmin(vals)) == 10

    def test_negative_delta(self):
        with pytest.raises(DomainError):
            h_plus(-0.1, 0.0, Q9)


class TestConvergence:
    def test_odd_n_scaled_regrets_near_constant(self):
        rows = asymptotic_convergence_check(Q5, [401])
        r = rows[0]
        assert r.n == 401
        assert abs(r.sqrtn_saa - r.sqrtn_opt) < 1e-9
        assert abs(r.sqrtn_opt / r.c_star - 1) < 0.1

    def test_gap_shrinks(self):
        rows = asymptotic_convergence_check(Q9, [100, 1000])
        gaps = [abs(r.sqrtn_opt / r.c_star - 1) for r in rows]
        assert gaps[1] < gaps[0]

    def test_empty(self):
        with pytest.raises(DomainError):
            asymptotic_convergence_check(Q9, [])
