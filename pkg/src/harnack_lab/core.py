"""Shared domain types: problem parameters, uniform grid, fields,
trajectories, the gradient-flux model and piecewise-linear cutoffs.

All types are immutable after construction (frozen dataclasses, numpy
arrays marked read-only), so they can be shared freely between workers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .report import CheckReport


class InvalidInputError(ValueError):
    """A precondition on user-supplied data was violated."""


class DomainError(ValueError):
    """An evaluation was requested outside a function's domain."""


class StepFailureError(RuntimeError):
    """Newton failed to converge on an implicit step."""

    def __init__(self, message: str, residual: float = math.nan, time: float = math.nan):
        super().__init__(message)
        self.residual = residual
        self.time = time


class HypothesisFailedError(RuntimeError):
    """A check's hypothesis does not hold on the supplied trajectory.

    Distinct from a failed conclusion: a check that raises this never
    produced a verdict about the inequality it verifies.
    """


def _readonly(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Params:
    """Full problem description for one experiment.

    p          : gradient exponent, 1 < p < 2 (singular range)
    domain     : spatial interval (alpha, beta)
    T          : time horizon of the verification window (0, T]
    tau_pre    : pre-history width of the space-time domain; only its
                 positivity matters, no estimate depends on its value
    M          : positivity threshold on the anchor segment
    y          : anchor point in (alpha, beta)
    n_cells    : mesh resolution (uniform cells)
    dt         : time step
    eps_reg    : gradient regularization added under the p/2 power so the
                 Newton linearization has a bounded coefficient
    """

    p: float
    domain: tuple[float, float]
    T: float
    tau_pre: float = 1.0
    M: float = 1.0
    y: float = 0.0
    n_cells: int = 256
    dt: float = 1e-3
    eps_reg: float = 1e-8
    newton_tol: float = 1e-9
    newton_max_iter: int = 60

    def __post_init__(self):
        alpha, beta = self.domain
        if not (1.0 < self.p < 2.0):
            raise InvalidInputError(f"p must lie in (1, 2), got {self.p}")
        if not (alpha < self.y < beta):
            raise InvalidInputError(f"anchor y={self.y} not inside ({alpha}, {beta})")
        if not self.T > 0:
            raise InvalidInputError("T must be positive")
        if not self.tau_pre > 0:
            raise InvalidInputError("tau_pre must be positive")
        if not self.M > 0:
            raise InvalidInputError("M must be positive")
        if self.n_cells < 16:
            raise InvalidInputError("n_cells must be >= 16")
        if not self.dt > 0:
            raise InvalidInputError("dt must be positive")
        if self.eps_reg < 0:
            raise InvalidInputError("eps_reg must be >= 0")

    def make_grid(self) -> "Grid":
        return Grid.uniform(self.domain[0], self.domain[1], self.n_cells)


@dataclass(frozen=True)
class Grid:
    """Uniform grid of n_cells+1 nodes on [alpha, beta]."""

    nodes: np.ndarray
    h: float

    def __post_init__(self):
        object.__setattr__(self, "nodes", _readonly(self.nodes))
        if self.nodes.ndim != 1 or len(self.nodes) < 2:
            raise InvalidInputError("grid needs at least two nodes")
        if not np.all(np.diff(self.nodes) > 0):
            raise InvalidInputError("grid nodes must be strictly increasing")

    @classmethod
    def uniform(cls, alpha: float, beta: float, n_cells: int) -> "Grid":
        if n_cells < 1 or beta <= alpha:
            raise InvalidInputError("need beta > alpha and n_cells >= 1")
        h = (beta - alpha) / n_cells
        return cls(np.linspace(alpha, beta, n_cells + 1), h)

    @property
    def n_cells(self) -> int:
        return len(self.nodes) - 1

    @property
    def alpha(self) -> float:
        return float(self.nodes[0])

    @property
    def beta(self) -> float:
        return float(self.nodes[-1])

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])

    def lumped_masses(self) -> np.ndarray:
        """Trapezoid nodal weights: h at interior nodes, h/2 at endpoints."""
        m = np.full(len(self.nodes), self.h)
        m[0] = m[-1] = 0.5 * self.h
        return m

    def index_of(self, x: float) -> int:
        """Nearest node index to x."""
        return int(np.argmin(np.abs(self.nodes - x)))

    def ball_slice(self, center: float, radius: float) -> tuple[int, int]:
        """Node index range [i0, i1] covering (center-radius, center+radius),
        snapped *outward* so the returned set never undercovers the ball.
        """
        lo, hi = center - radius, center + radius
        if lo < self.alpha - 1e-12 * max(1.0, abs(self.alpha)) or hi > self.beta + 1e-12 * max(1.0, abs(self.beta)):
            raise InvalidInputError(
                f"ball ({lo}, {hi}) exceeds grid [{self.alpha}, {self.beta}]")
        i0 = int(np.searchsorted(self.nodes, lo, side="right") - 1)
        i1 = int(np.searchsorted(self.nodes, hi, side="left"))
        return max(i0, 0), min(i1, len(self.nodes) - 1)


@dataclass(frozen=True)
class Field:
    """Nodal values at one time level."""

    values: np.ndarray
    time: float

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))
        if not np.all(np.isfinite(self.values)):
            raise InvalidInputError(f"field at t={self.time} has non-finite values")


@dataclass(frozen=True)
class Trajectory:
    """A numerical space-time solution: one Field per recorded time."""

    grid: Grid
    times: np.ndarray
    fields: tuple[Field, ...]
    bc_record: object = None
    step_stats: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "times", _readonly(self.times))
        object.__setattr__(self, "fields", tuple(self.fields))
        if len(self.times) != len(self.fields):
            raise InvalidInputError("times and fields length mismatch")
        if not np.all(np.diff(self.times) > 0):
            raise InvalidInputError("times must be strictly increasing")
        n = len(self.grid.nodes)
        for f, t in zip(self.fields, self.times):
            if len(f.values) != n:
                raise InvalidInputError("field length does not match grid")
            if abs(f.time - t) > 1e-9 * max(1.0, abs(t)):
                raise InvalidInputError("field time disagrees with times entry")

    def values_matrix(self) -> np.ndarray:
        """Stacked (n_times, n_nodes) value array."""
        return np.stack([f.values for f in self.fields])

    def time_window(self, t_lo: float, t_hi: float) -> np.ndarray:
        """Indices of recorded levels with t_lo <= t <= t_hi (small slack)."""
        eps = 1e-9 * max(1.0, abs(t_hi))
        return np.nonzero((self.times >= t_lo - eps) & (self.times <= t_hi + eps))[0]


@dataclass(frozen=True)
class FluxModel:
    """Gradient flux A(x, t, u, s) with its two-sided structure constants.

    Admissible models satisfy A*s >= C_o|s|^p and |A| <= C_1|s|^{p-1}.
    """

    p: float
    C_o: float
    C_1: float
    evaluate: Callable[[np.ndarray, float, np.ndarray, np.ndarray], np.ndarray]


def prototype_flux(p: float) -> FluxModel:
    """The model A = |s|^{p-2} s, with C_o = C_1 = 1.

    The value at s = 0 is 0 by continuity (|s|^{p-1} -> 0 since p > 1).
    """
    if not (1.0 < p < 2.0):
        raise InvalidInputError(f"p must lie in (1, 2), got {p}")

    def evaluate(x, t, u, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        nz = s != 0.0
        out[nz] = np.abs(s[nz]) ** (p - 1.0) * np.sign(s[nz])
        return out

    return FluxModel(p=p, C_o=1.0, C_1=1.0, evaluate=evaluate)


def flux_eval(model: FluxModel, x, t, u, s):
    """Evaluate the flux at one point or a vector of gradients."""
    arrs = [np.asarray(v, dtype=float) for v in (x, t, u, s)]
    for a in arrs:
        if not np.all(np.isfinite(a)):
            raise InvalidInputError("flux_eval requires finite inputs")
    scalar = np.isscalar(s) or np.ndim(s) == 0
    out = model.evaluate(arrs[0], t, arrs[2], arrs[3])
    return float(out) if scalar else out


def check_structure(model: FluxModel, samples: Sequence[tuple]) -> CheckReport:
    """Verify the two structure bounds at every sample (x, t, u, s).

    Both bounds are computed through the |s|^{p-1} factorization the
    prototype itself uses, so the prototype's margins are exactly zero.
    """
    if len(samples) == 0:
        raise InvalidInputError("check_structure needs a non-empty sample list")
    p = model.p
    worst_lower = math.inf
    worst_upper = math.inf
    for (x, t, u, s) in samples:
        a = float(flux_eval(model, x, t, u, s))
        # |s|^{p-1} through the same numpy pipeline the prototype uses,
        # so its margins are exactly zero
        s_arr = np.asarray([s], dtype=float)
        abs_s_pm1 = float((np.abs(s_arr) ** (p - 1.0))[0]) if s != 0.0 else 0.0
        lower = a * s - model.C_o * abs_s_pm1 * abs(s)   # want >= 0
        upper = model.C_1 * abs_s_pm1 - abs(a)           # want >= 0
        worst_lower = min(worst_lower, lower)
        worst_upper = min(worst_upper, upper)
    margin = min(worst_lower, worst_upper)
    tol = 1e-12
    return CheckReport(
        name="structure",
        passed=bool(margin >= -tol),
        lhs=0.0,
        rhs=margin,
        margin=margin,
        details={
            "worst_lower_margin": worst_lower,
            "worst_upper_margin": worst_upper,
            "n_samples": len(samples),
            "tolerance": tol,
        },
    )


def p_energy(field: Field, grid: Grid, p: float) -> float:
    """Discrete p-Dirichlet energy sum over cells of (1/p)|du/h|^p h."""
    if not (1.0 < p < 2.0):
        raise InvalidInputError(f"p must lie in (1, 2), got {p}")
    if len(field.values) != len(grid.nodes):
        raise InvalidInputError("field does not live on this grid")
    s = np.diff(field.values) / grid.h
    return float(np.sum(np.abs(s) ** p) * grid.h / p)


@dataclass(frozen=True)
class Cutoff:
    """Separable cutoff zeta1(x) * zeta2(t).

    zeta1: 1 on the half ball around y, 0 outside the full ball, linear
    ramps between, so |zeta1'| <= gamma1/rho with gamma1 = 2. zeta2: 1 up
    to T/2, 0 from T on, linear between, so |zeta2'| <= gamma2/T with
    gamma2 = 2 and zeta2 non-increasing.
    """

    zeta1: Callable[[np.ndarray], np.ndarray]
    zeta2: Callable[[np.ndarray], np.ndarray]
    gamma1_const: float
    gamma2_const: float
    y: float
    rho: float
    T: float

    def __call__(self, x, t):
        return self.zeta1(np.asarray(x, dtype=float)) * float(self.zeta2(np.asarray(t, dtype=float)))


def make_cutoff(y: float, rho: float, T: float) -> Cutoff:
    if rho <= 0 or T <= 0:
        raise InvalidInputError("cutoff needs rho > 0 and T > 0")

    def zeta1(x):
        return np.clip(2.0 - 2.0 * np.abs(np.asarray(x, dtype=float) - y) / rho, 0.0, 1.0)

    def zeta2(t):
        return np.clip(2.0 - 2.0 * np.asarray(t, dtype=float) / T, 0.0, 1.0)

    return Cutoff(zeta1=zeta1, zeta2=zeta2, gamma1_const=2.0, gamma2_const=2.0,
                  y=y, rho=rho, T=T)
