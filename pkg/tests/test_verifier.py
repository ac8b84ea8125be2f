import math

import numpy as np
import pytest

from harnack_lab.constants import compute_chain, rho_bar
from harnack_lab.core import (Field, HypothesisFailedError, InvalidInputError,
                              Params, Trajectory, make_cutoff)
from harnack_lab.exact import (BarenblattParams, barenblatt_eval,
                               barenblatt_field, barenblatt_trajectory)
from harnack_lab.solver import BoundarySpec, solve
from harnack_lab.verifier import (check_degiorgi, check_energy_estimate,
                                  check_harnack, check_log_lemma,
                                  check_transformed_equation,
                                  check_weak_supersolution, gamma_energy,
                                  measure_bad_times, transform_trajectory)
from harnack_lab.weakform import TensorBump, TrajectoryWeakForm, default_bumps


def constant_trajectory(value, domain=(-40.0, 40.0), n=256, T=1.0, dt=0.01):
    grid = Params(p=1.5, domain=domain, T=T, y=0.0, n_cells=n, dt=dt).make_grid()
    times = np.arange(0.0, T + 1e-12, dt)
    fields = tuple(Field(values=np.full(len(grid.nodes), value), time=t)
                   for t in times)
    return Trajectory(grid=grid, times=times, fields=fields)


def pinned_trajectory(p=1.5, M=1.0, T=1.0, n=512, dt=2e-3, hw_ratio=24.0,
                      horizon_frac=0.5):
    rb = rho_bar(M, T, p)
    hw = hw_ratio * rb
    pr = Params(p=p, domain=(-hw, hw), T=T, y=0.0, M=M, n_cells=n, dt=dt,
                eps_reg=1e-12)
    grid = pr.make_grid()
    s_init = M ** (-2.0 * (p - 1.0))
    bp = BarenblattParams(p=p, C=1.0, t0=s_init)
    u0 = Field(values=barenblatt_eval(bp, grid.nodes, 0.0), time=0.0)
    bc = BoundarySpec.dirichlet(0.0, 0.0).with_pin(grid.index_of(0.0), 2.0 * M)
    traj = solve(pr, u0, bc, horizon_frac * T)
    return pr, traj


class TestGammaEnergy:
    def test_values(self):
        # (2/(p-1)) * max(2^{p-1}, p/(2-p))
        assert gamma_energy(1.2) == pytest.approx(15.0, rel=1e-12)
        assert gamma_energy(1.5) == pytest.approx(12.0, rel=1e-12)
        assert gamma_energy(1.8) == pytest.approx(22.5, rel=1e-12)

    def test_blows_up_toward_one(self):
        assert gamma_energy(1.01) > gamma_energy(1.1) > gamma_energy(1.3)


class TestWeakSupersolution:
    def test_zero_test_function_passes(self):
        traj = constant_trajectory(1.0, n=64)
        phi = TensorBump(x_center=0.0, x_halfwidth=5.0)
        zero = TensorBump(x_center=0.0, x_halfwidth=5.0, t_center=-100.0,
                          t_halfwidth=1.0)   # vanishes on all levels
        rep = check_weak_supersolution(traj, 1.5, test_functions=[zero])
        assert rep.passed and rep.lhs == 0.0

    def test_exact_solution_residual_shrinks(self):
        resids = []
        for n, dt in [(128, 2e-2), (256, 1e-2)]:
            grid = Params(p=1.5, domain=(-8, 8), T=1.0, y=0.0, n_cells=n,
                          dt=dt).make_grid()
            times = np.arange(0.0, 1.0 + 1e-12, dt)
            traj = barenblatt_trajectory(BarenblattParams(p=1.5, t0=1.0),
                                         grid, times)
            rep = check_weak_supersolution(traj, 1.5)
            assert rep.passed
            resids.append(abs(rep.lhs))
        assert resids[1] < resids[0]

    def test_pinned_solve_passes(self):
        pr, traj = pinned_trajectory(n=256, hw_ratio=12.0)
        rep = check_weak_supersolution(traj, pr.p)
        assert rep.passed
        assert rep.lhs >= -1e-10

    def test_subsolution_fails(self):
        # reversed-time exact solution: u_t sign flipped, strongly negative
        grid = Params(p=1.5, domain=(-8, 8), T=1.0, y=0.0, n_cells=256,
                      dt=1e-2).make_grid()
        times = np.arange(0.0, 1.0 + 1e-12, 1e-2)
        bp = BarenblattParams(p=1.5, t0=1.0)
        fields = tuple(Field(values=barenblatt_eval(bp, grid.nodes, 1.0 - t),
                             time=t) for t in times)
        traj = Trajectory(grid=grid, times=times, fields=fields)
        rep = check_weak_supersolution(traj, 1.5, tol=1e-4)
        assert not rep.passed

    def test_support_validation(self):
        traj = constant_trajectory(1.0, n=64)
        wide = TensorBump(x_center=0.0, x_halfwidth=100.0)
        with pytest.raises(InvalidInputError):
            check_weak_supersolution(traj, 1.5, test_functions=[wide])


class TestEnergyEstimate:
    def test_empty_truncation_set_passes(self):
        traj = constant_trajectory(5.0, n=128)
        cut = make_cutoff(0.0, 10.0, 1.0)
        rep = check_energy_estimate(traj, 1.5, cut, a=0.5, omega=1.0, H=0.5)
        assert rep.passed
        assert rep.lhs == 0.0 and rep.rhs == 0.0
        assert rep.details["gamma_star"] is None

    @pytest.mark.parametrize("p", [1.2, 1.5, 1.8])
    def test_barenblatt_passes_with_derived_gamma(self, p):
        bp = BarenblattParams(p=p, C=1.0, t0=1.0)
        pr = Params(p=p, domain=(-8, 8), T=4.0, y=0.0, n_cells=512, dt=0.02)
        grid = pr.make_grid()
        times = np.arange(0.0, 4.0 + 1e-12, 0.02)
        traj = barenblatt_trajectory(bp, grid, times)
        cut = make_cutoff(0.0, 2.0, 4.0)
        rep = check_energy_estimate(traj, p, cut, a=0.25, omega=1.0, H=0.5)
        assert rep.passed
        assert rep.details["gamma_star"] < rep.details["gamma_used"]

    def test_reference_scenario_gamma_ordering(self):
        # deterioration toward p -> 1 on the fixed reference scenario
        stars = {}
        for p in (1.2, 1.8):
            bp = BarenblattParams(p=p, C=1.0, t0=1.0)
            pr = Params(p=p, domain=(-8, 8), T=4.0, y=0.0, n_cells=512, dt=0.02)
            grid = pr.make_grid()
            times = np.arange(0.0, 4.0 + 1e-12, 0.02)
            traj = barenblatt_trajectory(bp, grid, times)
            cut = make_cutoff(0.0, 2.0, 4.0)
            rep = check_energy_estimate(traj, p, cut, a=0.25, omega=1.0, H=0.5)
            stars[p] = rep.details["gamma_star"]
        assert stars[1.2] > stars[1.8]

    def test_gamma_star_scaling_invariance(self):
        from harnack_lab.solver import scaling_transform
        p = 1.5
        bp = BarenblattParams(p=p, C=1.0, t0=1.0)
        pr = Params(p=p, domain=(-8, 8), T=2.0, y=0.0, n_cells=512, dt=0.01)
        grid = pr.make_grid()
        times = np.arange(0.0, 2.0 + 1e-12, 0.01)
        traj = barenblatt_trajectory(bp, grid, times)
        cut = make_cutoff(0.0, 2.0, 2.0)
        rep = check_energy_estimate(traj, p, cut, a=0.5, omega=1.0, H=0.5)

        A, B = 2.0, 1.0
        tf = A ** (p - 2.0) * B ** p
        xf = A ** (2.0 * (p - 2.0) / p) * B
        scaled = scaling_transform(traj, A, B, p)
        cut2 = make_cutoff(0.0, 2.0 * xf, 2.0 * tf)
        rep2 = check_energy_estimate(scaled, p, cut2, a=0.5, omega=A * 1.0, H=0.5)
        ratio = rep2.details["gamma_star"] / rep.details["gamma_star"]
        assert 0.8 <= ratio <= 1.25

    def test_parameter_validation(self):
        traj = constant_trajectory(1.0, n=64)
        cut = make_cutoff(0.0, 5.0, 1.0)
        for bad in (dict(a=0.0), dict(a=1.0), dict(H=0.0), dict(H=1.5),
                    dict(omega=0.0)):
            kwargs = dict(a=0.5, omega=1.0, H=0.5)
            kwargs.update(bad)
            with pytest.raises(InvalidInputError):
                check_energy_estimate(traj, 1.5, cut, **kwargs)


class TestBadTimes:
    def test_no_bad_times_above_threshold(self):
        traj = constant_trajectory(2.0, T=1.0)
        assert measure_bad_times(traj, 0.0, 4.0, 0.5, 0.5) == 0.0

    def test_zero_solution_full_measure(self):
        traj = constant_trajectory(0.0, T=1.0, dt=0.01)
        meas = measure_bad_times(traj, 0.0, 4.0, 0.5, 0.5)
        assert meas == pytest.approx(0.5, abs=0.011)

    def test_monotone_in_threshold(self):
        pr, traj = pinned_trajectory(n=256, hw_ratio=12.0)
        thresholds = [1e-6, 1e-3, 1e-2, 0.1, 0.5]
        measures = [measure_bad_times(traj, 0.0, 2.0, thr, 0.5)
                    for thr in thresholds]
        assert all(a <= b for a, b in zip(measures, measures[1:]))


class TestLogLemma:
    def _chain(self, p, M=1.0, T=1.0):
        return compute_chain(p, M=M, T=T)

    def test_constant_2M_passes(self):
        pr = Params(p=1.5, domain=(-40, 40), T=1.0, y=0.0, M=1.0, n_cells=256,
                    dt=0.01)
        traj = constant_trajectory(2.0)
        rep = check_log_lemma(traj, pr, self._chain(1.5), rho=4 * rho_bar(1, 1, 1.5))
        assert rep.passed
        assert rep.lhs == 0.0

    def test_pinned_scenario_passes(self):
        pr, traj = pinned_trajectory(n=768, hw_ratio=90.0)
        chain = self._chain(1.5)
        rep = check_log_lemma(traj, pr, chain, rho=8 * chain.rho_bar)
        assert rep.passed
        assert rep.lhs <= chain.nu * pr.T / 2.0
        assert rep.details["far_ball_ok"] is True

    def test_adversarial_half_zero_fails(self):
        # u = 2M except zero on alternating levels inside B_{rho/2};
        # not a super-solution, bad measure about T/4 > nu T/2 for nu=1/4
        pr = Params(p=1.5, domain=(-40, 40), T=1.0, y=0.0, M=1.0, n_cells=256,
                    dt=0.01)
        grid = pr.make_grid()
        times = np.arange(0.0, 1.0 + 1e-12, 0.01)
        j = grid.index_of(0.0)
        fields = []
        for i, t in enumerate(times):
            vals = np.full(len(grid.nodes), 2.0)
            if i % 2 == 1:
                vals[j + 1] = 0.0     # keep the anchor itself above M
            fields.append(Field(values=vals, time=t))
        traj = Trajectory(grid=grid, times=times, fields=tuple(fields))
        chain = self._chain(1.5)
        rep = check_log_lemma(traj, pr, chain, rho=4 * chain.rho_bar)
        assert not rep.passed
        assert rep.lhs == pytest.approx(0.25, abs=0.02)
        assert rep.margin < 0

    def test_hypothesis_failure_is_distinct(self):
        pr = Params(p=1.5, domain=(-40, 40), T=1.0, y=0.0, M=1.0, n_cells=256,
                    dt=0.01)
        traj = constant_trajectory(0.5)    # anchor bound M=1 violated
        with pytest.raises(HypothesisFailedError):
            check_log_lemma(traj, pr, self._chain(1.5), rho=6.0)


class TestDeGiorgi:
    def test_global_M_zero_flux_stationary(self):
        pr = Params(p=1.5, domain=(-9, 9), T=1.0, y=0.0, n_cells=128, dt=0.02)
        grid = pr.make_grid()
        u0 = Field(values=np.full(len(grid.nodes), 1.0), time=0.0)
        rep = check_degiorgi(pr, M=1.0, rho=1.0, delta=0.9, u0=u0,
                             bc=BoundarySpec.zero_flux())
        assert rep.passed
        assert rep.details["delta_max"] == 1.0

    def test_indicator_datum_measures_delta_max(self):
        horizon = 2.0 ** 1.5
        pr = Params(p=1.5, domain=(-9, 9), T=1.0, y=0.0, n_cells=512,
                    dt=horizon / 300, eps_reg=1e-6)
        rep = check_degiorgi(pr, M=1.0, rho=1.0, delta=0.05)
        assert rep.passed
        dmax = rep.details["delta_max"]
        assert 0.0 < dmax < 1.0
        rep2 = check_degiorgi(pr, M=1.0, rho=1.0, delta=dmax / 2.0)
        assert rep2.passed

    def test_domain_must_cover_8rho(self):
        pr = Params(p=1.5, domain=(-4, 4), T=1.0, y=0.0, n_cells=128, dt=0.01)
        with pytest.raises(InvalidInputError):
            check_degiorgi(pr, M=1.0, rho=1.0, delta=0.1)

    def test_u0_below_M_rejected(self):
        pr = Params(p=1.5, domain=(-9, 9), T=1.0, y=0.0, n_cells=128, dt=0.02)
        grid = pr.make_grid()
        u0 = Field(values=np.zeros(len(grid.nodes)), time=0.0)
        with pytest.raises(InvalidInputError):
            check_degiorgi(pr, M=1.0, rho=1.0, delta=0.1, u0=u0)


class TestHarnack:
    def test_constant_2M_passes_with_huge_margin(self):
        pr = Params(p=1.5, domain=(-40, 40), T=1.0, y=0.0, M=1.0, n_cells=256,
                    dt=0.01)
        chain = compute_chain(1.5, M=1.0, T=1.0)
        traj = constant_trajectory(2.0)
        rep = check_harnack(traj, pr, chain, rho=4 * chain.rho_bar)
        assert rep.passed
        assert rep.log_scale
        assert rep.margin > 100.0
        assert rep.details["sigma_emp"] > 1.0

    def test_pinned_scenario(self):
        pr, traj = pinned_trajectory(n=768, hw_ratio=90.0)
        chain = compute_chain(1.5, M=1.0, T=1.0)
        rep = check_harnack(traj, pr, chain, rho=4 * chain.rho_bar)
        assert rep.passed
        assert rep.margin > 0
        assert 0.0 < rep.details["sigma_emp"] < 10.0

    def test_monotone_in_pin_value(self):
        margins = []
        for pin in (2.0, 4.0):
            rb = rho_bar(1.0, 1.0, 1.5)
            pr = Params(p=1.5, domain=(-24 * rb, 24 * rb), T=1.0, y=0.0, M=1.0,
                        n_cells=512, dt=2e-3, eps_reg=1e-12)
            grid = pr.make_grid()
            bp = BarenblattParams(p=1.5, C=1.0, t0=1.0)
            u0 = Field(values=barenblatt_eval(bp, grid.nodes, 0.0), time=0.0)
            bc = BoundarySpec.dirichlet(0.0, 0.0).with_pin(grid.index_of(0.0), pin)
            traj = solve(pr, u0, bc, 0.5)
            chain = compute_chain(1.5, M=1.0, T=1.0)
            margins.append(check_harnack(traj, pr, chain, 4 * chain.rho_bar).margin)
        assert margins[1] >= margins[0] - 1e-12

    def test_hypothesis_failure_raises(self):
        pr = Params(p=1.5, domain=(-40, 40), T=1.0, y=0.0, M=1.0, n_cells=256,
                    dt=0.01)
        chain = compute_chain(1.5, M=1.0, T=1.0)
        traj = constant_trajectory(0.5)
        with pytest.raises(HypothesisFailedError):
            check_harnack(traj, pr, chain, rho=4 * chain.rho_bar)

    def test_geometry_validation(self):
        pr = Params(p=1.5, domain=(-40, 40), T=1.0, y=0.0, M=1.0, n_cells=256,
                    dt=0.01)
        chain = compute_chain(1.5, M=1.0, T=1.0)
        traj = constant_trajectory(2.0)
        with pytest.raises(InvalidInputError):
            check_harnack(traj, pr, chain, rho=2 * chain.rho_bar)  # < 4 rho_bar
        with pytest.raises(InvalidInputError):
            check_harnack(traj, pr, chain, rho=50.0)               # exceeds grid


class TestTransformed:
    def test_exact_solution_residual_refines(self):
        chain = compute_chain(1.5, M=1.0, T=1.0)
        resids = []
        for n, dt in [(128, 4e-3), (256, 2e-3), (512, 1e-3)]:
            pr = Params(p=1.5, domain=(-20, 20), T=1.0, y=0.0, M=1.0,
                        n_cells=n, dt=dt)
            grid = pr.make_grid()
            times = np.arange(0.0, 0.45, dt)
            traj = barenblatt_trajectory(BarenblattParams(p=1.5, t0=1.0),
                                         grid, times)
            rep = check_transformed_equation(traj, pr, chain)
            assert rep.passed
            resids.append(rep.details["max_abs_residual"])
        ratios = [a / b for a, b in zip(resids, resids[1:])]
        assert all(r >= 1.5 for r in ratios)

    def test_constant_field_closed_form(self):
        # u constant in x: v = (c/M) e^{tau/(2-p)} solves the transformed
        # equation exactly; residual is quadrature error only
        pr = Params(p=1.5, domain=(-4, 4), T=1.0, y=0.0, M=1.0, n_cells=128,
                    dt=1e-3)
        chain = compute_chain(1.5, M=1.0, T=1.0)
        traj = constant_trajectory(3.0, domain=(-4, 4), n=128, T=0.45, dt=1e-3)
        rep = check_transformed_equation(traj, pr, chain)
        assert rep.passed
        assert rep.details["max_abs_residual"] <= rep.details["tolerance"]

    def test_pinned_transport(self):
        pr, traj = pinned_trajectory(n=384, hw_ratio=16.0)
        chain = compute_chain(1.5, M=1.0, T=1.0)
        rep = check_transformed_equation(traj, pr, chain)
        assert rep.passed
        assert rep.details["transport_ok"] is True

    def test_transport_bound_values(self):
        # v(0, tau) = (pin / M) e^{tau/(2-p)} >= e^{tau/(2-p)} with margin 2
        pr, traj = pinned_trajectory(n=256, hw_ratio=12.0)
        vtraj = transform_trajectory(traj, pr)
        jz = vtraj.grid.index_of(0.0)
        lv = vtraj.times > 0
        vals = vtraj.values_matrix()[lv, jz]
        need = np.exp(vtraj.times[lv] / 0.5)
        np.testing.assert_allclose(vals, 2.0 * need, rtol=1e-9)
