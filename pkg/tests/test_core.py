import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from harnack_lab.core import (Field, Grid, InvalidInputError, Params,
                              check_structure, flux_eval, make_cutoff,
                              p_energy, prototype_flux)


class TestFlux:
    def test_prototype_at_zero_gradient(self):
        fm = prototype_flux(1.5)
        assert flux_eval(fm, 0.0, 0.0, 1.0, 0.0) == 0.0

    def test_prototype_values(self):
        # |s|^{p-2} s at p=1.5, s=4: 4^{-1/2} * 4 = 2
        fm = prototype_flux(1.5)
        assert flux_eval(fm, 0.0, 0.0, 0.0, 4.0) == pytest.approx(2.0, rel=1e-14)
        assert flux_eval(fm, 0.0, 0.0, 0.0, -4.0) == pytest.approx(-2.0, rel=1e-14)

    def test_odd_symmetry(self):
        fm = prototype_flux(1.3)
        for s in (0.3, 1.7, 9.0):
            assert flux_eval(fm, 0, 0, 0, -s) == -flux_eval(fm, 0, 0, 0, s)

    def test_non_finite_input_rejected(self):
        fm = prototype_flux(1.5)
        with pytest.raises(InvalidInputError):
            flux_eval(fm, 0.0, 0.0, 0.0, math.nan)

    def test_bad_exponent_rejected(self):
        with pytest.raises(InvalidInputError):
            prototype_flux(2.0)
        with pytest.raises(InvalidInputError):
            prototype_flux(1.0)


class TestStructure:
    def _samples(self, seed=0, n=50):
        rng = np.random.default_rng(seed)
        out = [(float(x), float(t), float(u), float(s))
               for x, t, u, s in zip(rng.uniform(-5, 5, n), rng.uniform(0, 2, n),
                                     rng.uniform(0, 3, n), rng.uniform(-8, 8, n))]
        out.append((0.0, 0.0, 1.0, 0.0))
        return out

    @pytest.mark.parametrize("p", [1.2, 1.5, 1.8])
    def test_prototype_margins_exactly_zero(self, p):
        rep = check_structure(prototype_flux(p), self._samples())
        assert rep.passed
        assert rep.details["worst_lower_margin"] == 0.0
        assert rep.details["worst_upper_margin"] == 0.0

    def test_doubled_flux_fails_upper_bound(self):
        from harnack_lab.core import FluxModel
        p = 1.5
        proto = prototype_flux(p)
        doubled = FluxModel(p=p, C_o=1.0, C_1=1.0,
                            evaluate=lambda x, t, u, s: 2.0 * proto.evaluate(x, t, u, s))
        rep = check_structure(doubled, self._samples())
        assert not rep.passed
        assert rep.details["worst_upper_margin"] < 0

    def test_slack_bounds_pass(self):
        from harnack_lab.core import FluxModel
        p = 1.5
        proto = prototype_flux(p)
        slack = FluxModel(p=p, C_o=0.5, C_1=2.0, evaluate=proto.evaluate)
        samples = self._samples()[:-1]    # drop the s = 0 sample
        rep = check_structure(slack, samples)
        assert rep.passed
        assert rep.details["worst_lower_margin"] > 0
        assert rep.details["worst_upper_margin"] > 0

    def test_empty_samples_rejected(self):
        with pytest.raises(InvalidInputError):
            check_structure(prototype_flux(1.5), [])


class TestPEnergy:
    def test_constant_field_zero(self):
        g = Grid.uniform(0, 1, 32)
        f = Field(values=np.full(33, 7.0), time=0.0)
        assert p_energy(f, g, 1.5) == 0.0

    @pytest.mark.parametrize("n", [16, 64, 257])
    def test_linear_field(self, n):
        # u(x) = x on [0, 1]: gradient 1, energy 1/p
        g = Grid.uniform(0, 1, n)
        f = Field(values=g.nodes.copy(), time=0.0)
        assert p_energy(f, g, 1.5) == pytest.approx(1.0 / 1.5, rel=1e-12)

    def test_doubled_gradient(self):
        g = Grid.uniform(0, 1, 64)
        f = Field(values=2.0 * g.nodes, time=0.0)
        p = 1.5
        assert p_energy(f, g, p) == pytest.approx(2.0 ** p / p, rel=1e-12)

    @given(lam=st.floats(-4.0, 4.0), p=st.floats(1.05, 1.95))
    def test_homogeneity(self, lam, p):
        g = Grid.uniform(-1, 2, 24)
        base = np.sin(np.linspace(0, 3, 25))
        e1 = p_energy(Field(values=base, time=0.0), g, p)
        e2 = p_energy(Field(values=lam * base, time=0.0), g, p)
        assert e2 == pytest.approx(abs(lam) ** p * e1, rel=1e-9, abs=1e-12)
        assert e1 >= 0.0


class TestCutoff:
    def test_all_six_bounds_by_scan(self):
        y, rho, T = 0.3, 2.0, 1.5
        cut = make_cutoff(y, rho, T)
        xs = np.linspace(y - 2 * rho, y + 2 * rho, 2001)
        z1 = cut.zeta1(xs)
        assert np.all((0.0 <= z1) & (z1 <= 1.0))
        inner = np.abs(xs - y) <= rho / 2
        outer = np.abs(xs - y) >= rho
        assert np.all(z1[inner] == 1.0)
        assert np.all(z1[outer] == 0.0)
        slopes = np.abs(np.diff(z1) / np.diff(xs))
        assert np.max(slopes) <= cut.gamma1_const / rho * (1 + 1e-9)

        ts = np.linspace(0, 2 * T, 2001)
        z2 = cut.zeta2(ts)
        assert np.all((0.0 <= z2) & (z2 <= 1.0))
        assert np.all(z2[ts <= T / 2] == 1.0)
        assert np.all(z2[ts >= T] == 0.0)
        assert np.all(np.diff(z2) <= 1e-15)     # monotone non-increasing
        tslopes = np.abs(np.diff(z2) / np.diff(ts))
        assert np.max(tslopes) <= cut.gamma2_const / T * (1 + 1e-9)


class TestParamsAndGrid:
    def test_params_validation(self):
        good = dict(p=1.5, domain=(0, 1), T=1.0, y=0.5)
        Params(**good)
        for bad in (dict(p=2.5), dict(p=1.0), dict(y=2.0), dict(T=-1.0),
                    dict(M=0.0), dict(n_cells=4), dict(dt=0.0), dict(eps_reg=-1.0)):
            with pytest.raises(InvalidInputError):
                Params(**{**good, **bad})

    def test_grid_spacing_exact(self):
        g = Grid.uniform(-3.0, 5.0, 100)
        assert g.h == (5.0 - (-3.0)) / 100
        assert g.nodes[0] == -3.0 and g.nodes[-1] == 5.0
        assert np.all(np.diff(g.nodes) > 0)

    def test_ball_slice_snaps_outward(self):
        g = Grid.uniform(0, 1, 10)   # nodes at 0.0, 0.1, ..., 1.0
        i0, i1 = g.ball_slice(0.5, 0.25)
        # ball (0.25, 0.75): snapped outward to nodes 0.2 .. 0.8
        assert g.nodes[i0] <= 0.25 and g.nodes[i1] >= 0.75

    def test_ball_slice_rejects_overflow(self):
        g = Grid.uniform(0, 1, 10)
        with pytest.raises(InvalidInputError):
            g.ball_slice(0.5, 2.0)

    def test_immutability(self):
        g = Grid.uniform(0, 1, 16)
        with pytest.raises(ValueError):
            g.nodes[0] = 99.0
        f = Field(values=np.zeros(17), time=0.0)
        with pytest.raises(ValueError):
            f.values[0] = 1.0
