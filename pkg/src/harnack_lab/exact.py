"""Closed-form reference solutions and decay-exponent fitting.

The source-type self-similar family for u_t = (|u_x|^{p-2}u_x)_x with
1 < p < 2 is

    u(x, t) = s^{-a} (C + k |xi|^{p/(p-1)})^{-(p-1)/(2-p)},
    s = t + t0,  xi = (x - center) s^{-a},
    a = 1 / (2(p-1)),  k = ((2-p)/p) a^{1/(p-1)}.

It is strictly positive with far-field spatial decay |x|^{-p/(2-p)}.
The pair (a, k) is certified in-repo by the weak-form residual oracle
(`barenblatt_residual`) rather than trusted as given.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DomainError, Field, Grid, InvalidInputError
from .weakform import TrajectoryWeakForm, default_bumps
from .core import Trajectory


@dataclass(frozen=True)
class BarenblattParams:
    p: float
    C: float = 1.0
    t0: float = 0.0
    center: float = 0.0

    def __post_init__(self):
        if not (1.0 < self.p < 2.0):
            raise InvalidInputError(f"p must lie in (1, 2), got {self.p}")
        if self.C <= 0:
            raise InvalidInputError("profile constant C must be positive")
        if self.t0 < 0:
            raise InvalidInputError("time shift t0 must be >= 0")

    @property
    def alpha(self) -> float:
        return 1.0 / (2.0 * (self.p - 1.0))

    @property
    def k(self) -> float:
        return ((2.0 - self.p) / self.p) * self.alpha ** (1.0 / (self.p - 1.0))

    @property
    def profile_power(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def decay_exponent(self) -> float:
        """Far-field power of spatial decay: u ~ |x|^{-p/(2-p)}."""
        return self.p / (2.0 - self.p)


def barenblatt_eval(bp: BarenblattParams, x, t: float):
    """Evaluate the self-similar solution; strictly positive everywhere."""
    s = t + bp.t0
    if s <= 0:
        raise DomainError(f"t + t0 must be positive, got {s}")
    a = bp.alpha
    xi = (np.asarray(x, dtype=float) - bp.center) * s ** (-a)
    beta = (bp.p - 1.0) / (2.0 - bp.p)
    val = s ** (-a) * (bp.C + bp.k * np.abs(xi) ** bp.profile_power) ** (-beta)
    return float(val) if np.ndim(x) == 0 else val


def barenblatt_field(bp: BarenblattParams, grid: Grid, t: float) -> Field:
    return Field(values=barenblatt_eval(bp, grid.nodes, t), time=t)


def barenblatt_trajectory(bp: BarenblattParams, grid: Grid, times) -> Trajectory:
    times = np.asarray(times, dtype=float)
    fields = tuple(barenblatt_field(bp, grid, t) for t in times)
    return Trajectory(grid=grid, times=times, fields=fields)


def barenblatt_residual(bp: BarenblattParams, grid: Grid, t: float, dt: float,
                        test_functions=None) -> float:
    """Weak-form residual per unit time of the exact family over [t, t+dt].

    Returns the maximum over a basis of compactly-supported tensor bumps
    of |R(phi)| / dt, where R is the discrete weak functional on the two
    exact levels. This is the oracle certifying the (alpha, k) pair: it
    tends to 0 under (h, dt) refinement for the correct constants and
    stays bounded away from 0 for perturbed ones. With dt = 0 the time
    term telescopes and the returned value is exactly 0.
    """
    if dt < 0:
        raise InvalidInputError("dt must be >= 0")
    if dt == 0.0:
        u = barenblatt_eval(bp, grid.nodes, t)
        m = grid.lumped_masses()
        phis = test_functions or default_bumps(grid, t, t, n_time=0)
        worst = 0.0
        for phi in phis:
            psi = phi.space_values(grid.nodes) if hasattr(phi, "space_values") else phi(grid.nodes, t)
            worst = max(worst, abs(float(np.dot(m * (u - u), psi))))
        return worst
    traj = barenblatt_trajectory(bp, grid, [t, t + dt])
    wf = TrajectoryWeakForm(traj, bp.p, reaction=0.0)
    phis = test_functions or default_bumps(grid, t, t + dt, n_time=0)
    return wf.max_abs_over(phis) / dt


def fit_decay_exponent(field: Field, grid: Grid, window: tuple[float, float],
                       center: float = 0.0) -> tuple[float, float]:
    """Least-squares slope of log u versus log|x - center| over the window.

    window gives bounds (lo, hi) on the distance |x - center|. Returns
    (slope, r_squared). Requires at least 8 nodes in the window and
    strictly positive values there.
    """
    lo, hi = window
    if not (0 < lo < hi):
        raise InvalidInputError("window must satisfy 0 < lo < hi")
    r = np.abs(grid.nodes - center)
    mask = (r >= lo) & (r <= hi)
    if int(mask.sum()) < 8:
        raise InvalidInputError("window must contain at least 8 nodes")
    u = field.values[mask]
    if np.any(u <= 0):
        raise DomainError("fit window contains non-positive values")
    X = np.log(r[mask])
    Y = np.log(u)
    slope, intercept = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + intercept)
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(r2)
