import math

import numpy as np
import pytest

from harnack_lab.core import DomainError, Grid, InvalidInputError, Field
from harnack_lab.exact import (BarenblattParams, barenblatt_eval,
                               barenblatt_field, barenblatt_residual,
                               fit_decay_exponent)


class PerturbedK(BarenblattParams):
    """Negative control: profile constant off by 10%."""

    @property
    def k(self):
        return 1.1 * super().k


class TestEval:
    def test_center_value_unit_time(self):
        bp = BarenblattParams(p=1.7, C=1.0, t0=1.0)
        assert barenblatt_eval(bp, bp.center, 0.0) == pytest.approx(1.0, rel=1e-14)

    def test_alpha_formula(self):
        # p = 1.5: alpha = 1 / (2 * 0.5) = 1
        assert BarenblattParams(p=1.5).alpha == pytest.approx(1.0, rel=1e-14)
        assert BarenblattParams(p=1.2).alpha == pytest.approx(2.5, rel=1e-14)

    def test_domain_error(self):
        bp = BarenblattParams(p=1.5, t0=0.0)
        with pytest.raises(DomainError):
            barenblatt_eval(bp, 0.0, 0.0)

    def test_even_decreasing_positive(self):
        bp = BarenblattParams(p=1.4, C=2.0)
        xs = np.linspace(0.0, 50.0, 200)
        u_plus = barenblatt_eval(bp, xs, 1.0)
        u_minus = barenblatt_eval(bp, -xs, 1.0)
        assert np.allclose(u_plus, u_minus, rtol=1e-14)
        assert np.all(np.diff(u_plus) < 0)
        assert np.all(u_plus > 0)

    def test_loglog_slope_p15(self):
        # far-field slope -p/(2-p) = -3 for p = 1.5
        bp = BarenblattParams(p=1.5, C=1.0, t0=1.0)
        xs = np.geomspace(1e2, 1e4, 64)
        slope = np.polyfit(np.log(xs), np.log(barenblatt_eval(bp, xs, 0.0)), 1)[0]
        assert slope == pytest.approx(-3.0, abs=0.01)


class TestResidualOracle:
    @pytest.mark.parametrize("p", [1.2, 1.5, 1.8])
    def test_certifies_alpha_k_under_refinement(self, p):
        bp = BarenblattParams(p=p, C=1.0)
        resids = []
        for n, dt in [(64, 4e-2), (128, 2e-2), (256, 1e-2), (512, 5e-3)]:
            grid = Grid.uniform(-8, 8, n)
            resids.append(barenblatt_residual(bp, grid, 1.0, dt))
        orders = [math.log2(a / b) for a, b in zip(resids, resids[1:])]
        assert all(r2 < r1 for r1, r2 in zip(resids, resids[1:]))
        assert orders[-1] >= 1.0

    def test_perturbed_k_stays_bounded_away(self):
        bad = PerturbedK(p=1.5, C=1.0)
        r_coarse = barenblatt_residual(bad, Grid.uniform(-8, 8, 64), 1.0, 4e-2)
        r_fine = barenblatt_residual(bad, Grid.uniform(-8, 8, 512), 1.0, 5e-3)
        good_fine = barenblatt_residual(BarenblattParams(p=1.5, C=1.0),
                                        Grid.uniform(-8, 8, 512), 1.0, 5e-3)
        assert r_fine > 0.5 * r_coarse
        assert r_fine > 10.0 * good_fine

    def test_zero_dt_time_term_telescopes(self):
        bp = BarenblattParams(p=1.5, C=1.0)
        assert barenblatt_residual(bp, Grid.uniform(-8, 8, 64), 1.0, 0.0) == 0.0


class TestDecayFit:
    def test_exact_power(self):
        g = Grid.uniform(-2e4, 2e4, 4096)
        r = np.maximum(np.abs(g.nodes), 1e-6)
        f = Field(values=r ** -3.0, time=0.0)
        slope, r2 = fit_decay_exponent(f, g, (1e2, 1e4))
        assert slope == pytest.approx(-3.0, rel=1e-12)
        assert r2 == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("p,target,tol", [(1.5, -3.0, 0.01 * 3),
                                              (1.8, -9.0, 0.02 * 9)])
    def test_barenblatt_far_field(self, p, target, tol):
        bp = BarenblattParams(p=p, C=1.0, t0=1.0)
        g = Grid.uniform(-1.05e4, 1.05e4, 8192)
        fld = barenblatt_field(bp, g, 0.0)
        slope, _ = fit_decay_exponent(fld, g, (1e2, 1e4))
        assert slope == pytest.approx(target, abs=tol)

    def test_nonpositive_values_rejected(self):
        g = Grid.uniform(0.5, 300.0, 128)
        vals = np.ones(129)
        vals[60] = -1.0
        with pytest.raises(DomainError):
            fit_decay_exponent(Field(values=vals, time=0.0), g, (1.0, 299.0))

    def test_needs_eight_nodes(self):
        g = Grid.uniform(0.5, 300.0, 128)
        f = Field(values=np.ones(129), time=0.0)
        with pytest.raises(InvalidInputError):
            fit_decay_exponent(f, g, (100.0, 105.0))
