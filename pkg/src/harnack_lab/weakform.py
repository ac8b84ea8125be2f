"""Discrete weak form of u_t - (|u_x|^{p-2}u_x)_x = r*u on trajectories.

The functional is built to annihilate the implicit scheme exactly: time
differences are paired with the test function at the new level, fluxes
live on cell midpoints, and spatial integrals use the same lumped masses
as the solver. For an exact solution sampled on the grid it converges to

    int u*phi dx |_{t0}^{tN} + int int [-u phi_t + |u_x|^{p-2}u_x phi_x
                                        - r u phi] dx dt

at first order in dt and second order in h.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import Grid, InvalidInputError, Trajectory


def quartic_bump(center: float, halfwidth: float) -> Callable[[np.ndarray], np.ndarray]:
    """Non-negative C^1 bump (1 - r^2)^2 supported on |x-center| < halfwidth."""
    if halfwidth <= 0:
        raise InvalidInputError("bump halfwidth must be positive")

    def profile(x):
        r = (np.asarray(x, dtype=float) - center) / halfwidth
        return np.where(np.abs(r) < 1.0, (1.0 - r * r) ** 2, 0.0)

    return profile


@dataclass(frozen=True)
class TensorBump:
    """Separable non-negative test function psi(x) * chi(t).

    chi is identically 1 when t_halfwidth is None (no time localization;
    the weak functional keeps its own time boundary terms).
    """

    x_center: float
    x_halfwidth: float
    t_center: float = 0.0
    t_halfwidth: float | None = None

    def space_values(self, x: np.ndarray) -> np.ndarray:
        return quartic_bump(self.x_center, self.x_halfwidth)(x)

    def time_values(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.t_halfwidth is None:
            return np.ones_like(t)
        return quartic_bump(self.t_center, self.t_halfwidth)(t)

    def __call__(self, x, t):
        return self.space_values(np.asarray(x, dtype=float)) * float(self.time_values(np.asarray(t)))

    @property
    def x_support(self) -> tuple[float, float]:
        return self.x_center - self.x_halfwidth, self.x_center + self.x_halfwidth


def default_bumps(grid: Grid, t_lo: float, t_hi: float,
                  n_space: int = 4, n_time: int = 2) -> list[TensorBump]:
    """A small fixed basis of tensor bumps strictly inside the grid.

    Includes, for each space bump, one time-constant member plus n_time
    interior time bumps spanning (t_lo, t_hi).
    """
    a, b = grid.alpha, grid.beta
    width = b - a
    bumps = []
    for j in range(n_space):
        c = a + width * (j + 1) / (n_space + 1)
        hw = 0.45 * width / (n_space + 1) + 0.15 * width
        hw = min(hw, (c - a) * 0.95, (b - c) * 0.95)
        bumps.append(TensorBump(c, hw))
        span = t_hi - t_lo
        if span > 0:
            for k in range(n_time):
                tc = t_lo + span * (k + 1) / (n_time + 1)
                thw = 0.6 * span / (n_time + 1)
                bumps.append(TensorBump(c, hw, tc, thw))
    return bumps


class TrajectoryWeakForm:
    """Evaluates the discrete weak residual of a trajectory against test
    functions, precomputing the per-level flux and time-difference data.
    """

    def __init__(self, traj: Trajectory, p: float, reaction: float = 0.0):
        self.grid = traj.grid
        self.times = np.asarray(traj.times, dtype=float)
        self.p = p
        self.reaction = reaction
        v = traj.values_matrix()
        self.values = v
        h = self.grid.h
        self.m = self.grid.lumped_masses()
        self.dts = np.diff(self.times)
        # flux at cell midpoints for every level past the first
        s = np.diff(v[1:], axis=1) / h
        a = np.abs(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            flux = np.where(s != 0.0, a ** (p - 1.0) * np.sign(s), 0.0)
        self.flux = flux                      # (N, n_cells)
        self.du = v[1:] - v[:-1]              # (N, n_nodes)

    def _check_support(self, psi_nodes: np.ndarray):
        if abs(psi_nodes[0]) > 0 or abs(psi_nodes[-1]) > 0:
            raise InvalidInputError(
                "test function must be compactly supported inside the grid")

    def residual(self, phi) -> float:
        """Weak residual R(phi); phi is a TensorBump or callable phi(x, t)."""
        nodes = self.grid.nodes
        if isinstance(phi, TensorBump):
            lo, hi = phi.x_support
            if lo <= self.grid.alpha or hi >= self.grid.beta:
                raise InvalidInputError(
                    "test function support exceeds the grid interior")
            psi = phi.space_values(nodes)
            chi = phi.time_values(self.times)
            return self._residual_separable(psi, chi)
        phi_levels = np.stack([np.asarray(phi(nodes, t), dtype=float) for t in self.times])
        for row in phi_levels:
            self._check_support(row)
        acc = 0.0
        for n in range(1, len(self.times)):
            pn = phi_levels[n]
            acc += float(np.dot(self.m * self.du[n - 1], pn))
            acc += self.dts[n - 1] * float(np.dot(self.flux[n - 1], np.diff(pn)))
            if self.reaction != 0.0:
                acc -= self.dts[n - 1] * self.reaction * float(
                    np.dot(self.m * self.values[n], pn))
        return acc

    def _residual_separable(self, psi: np.ndarray, chi: np.ndarray) -> float:
        self._check_support(psi)
        dpsi = np.diff(psi)
        mpsi = self.m * psi
        time_part = self.du @ mpsi                       # (N,)
        space_part = self.dts * (self.flux @ dpsi)       # (N,)
        acc = time_part @ chi[1:] + space_part @ chi[1:]
        if self.reaction != 0.0:
            acc -= (self.dts * (self.values[1:] @ mpsi)) @ chi[1:] * self.reaction
        return float(acc)

    def min_over(self, phis: Sequence) -> tuple[float, int]:
        """Minimum residual over a basis and the index attaining it."""
        vals = [self.residual(phi) for phi in phis]
        i = int(np.argmin(vals))
        return vals[i], i

    def max_abs_over(self, phis: Sequence) -> float:
        return max(abs(self.residual(phi)) for phi in phis)
