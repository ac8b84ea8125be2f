"""The explicit constant chain behind the sidewise Harnack bound, and the
change of variables that straightens the anchor segment.

The chain composes as

    s_o      = ceil(gamma1 / nu) + 1
    e^{tau_o} = (5/2)^p 2^{s_o(2-p)} / delta
    sigma_o  = 2^{-(s_o+1)} (2/(5c))^{p/(2-p)}
    sigma_bar= 2^{-(s_o+2)} (2/5)^{p/(2-p)} exp(-(2/(2-p)) e^{tau_o})

sigma_bar is double-exponentially small (e^{-450} at typical inputs), so
every sigma is carried as a natural log end to end; comparisons against
measured infima happen in log space.

gamma1 and delta are genuine inputs: gamma1 defaults to 2 (the Lipschitz
constant of the piecewise-linear space cutoff), delta to a per-p table
calibrated empirically by the positivity-persistence sweep. The table is
non-normative; see DELTA_TABLE.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError, InvalidInputError

NU_DEFAULT = 0.25
GAMMA1_DEFAULT = 2.0
C_DEFAULT = 4.0

# Empirical delta(p), non-normative: about half the measured largest
# delta for which the half-threshold persists on the reference scenario
# (M = 1, rho = 1, indicator data; measured delta_max 0.48 / 0.59 / 0.78).
# See verifier.check_degiorgi and the calibration test.
DELTA_TABLE = {
    1.2: 0.20,
    1.5: 0.25,
    1.8: 0.35,
}
DELTA_FALLBACK = 0.1


def delta_default(p: float) -> float:
    for key, val in DELTA_TABLE.items():
        if abs(p - key) < 1e-9:
            return val
    return DELTA_FALLBACK


@dataclass(frozen=True)
class ConstantChain:
    p: float
    nu: float
    gamma1: float
    delta: float
    c: float
    s_o: int
    tau_o_transformed: float
    log_sigma_o: float
    log_sigma_bar: float
    theta_coeff: float
    rho_bar: float | None = None

    def __post_init__(self):
        if self.s_o < 2:
            raise InvalidInputError("s_o must be >= 2")
        if not (self.log_sigma_bar < self.log_sigma_o < 0.0):
            raise InvalidInputError(
                "chain ordering violated: need log sigma_bar < log sigma_o < 0")

    @property
    def e_tau_o(self) -> float:
        return math.exp(self.tau_o_transformed)

    @property
    def log_k_transform(self) -> float:
        """log of k = e^{tau_o/(2-p)}, the transformed-level threshold."""
        return self.tau_o_transformed / (2.0 - self.p)

    def to_record(self) -> dict:
        rec = {
            "p": self.p,
            "nu": self.nu,
            "gamma1": self.gamma1,
            "delta": self.delta,
            "c": self.c,
            "s_o": self.s_o,
            "e_tau_o": self.e_tau_o,
            "tau_o_transformed": self.tau_o_transformed,
            "log_sigma_o": self.log_sigma_o,
            "log_sigma_bar": self.log_sigma_bar,
            "log_k_transform": self.log_k_transform,
            "theta_coeff": self.theta_coeff,
        }
        if self.rho_bar is not None:
            rec["rho_bar"] = self.rho_bar
        return rec


def rho_bar(M: float, T: float, p: float) -> float:
    """The length scale with (T / rho_bar^p)^{1/(2-p)} = M/2 identically."""
    if M <= 0 or T <= 0:
        raise InvalidInputError("rho_bar needs M > 0 and T > 0")
    if not (1.0 < p < 2.0):
        raise InvalidInputError(f"p must lie in (1, 2), got {p}")
    return (2.0 ** (2.0 - p) * T / M ** (2.0 - p)) ** (1.0 / p)


def theta(delta: float, M: float, p: float) -> float:
    """Persistence time coefficient theta = delta * M^{2-p}."""
    if not (0.0 < delta < 1.0):
        raise InvalidInputError("delta must lie in (0, 1)")
    if M <= 0:
        raise InvalidInputError("M must be positive")
    return delta * M ** (2.0 - p)


def compute_chain(p: float, nu: float = NU_DEFAULT, gamma1: float = GAMMA1_DEFAULT,
                  delta: float | None = None, c: float = C_DEFAULT,
                  M: float | None = None, T: float | None = None) -> ConstantChain:
    """Compose the full constant chain; all sigma quantities as logs.

    M and T are optional; when both are given the chain also carries the
    length scale rho_bar(M, T, p).
    """
    if not (1.0 < p < 2.0):
        raise InvalidInputError(f"p must lie in (1, 2), got {p}")
    if not (0.0 < nu < 1.0):
        raise InvalidInputError("nu must lie in (0, 1)")
    if gamma1 <= 0:
        raise InvalidInputError("gamma1 must be positive")
    if delta is None:
        delta = delta_default(p)
    if not (0.0 < delta < 1.0):
        raise InvalidInputError("delta must lie in (0, 1)")
    if c < 4.0:
        raise InvalidInputError("c must be >= 4")

    s_o = math.ceil(gamma1 / nu) + 1
    q = p / (2.0 - p)
    tau_o = p * math.log(2.5) + s_o * (2.0 - p) * math.log(2.0) - math.log(delta)
    log_sigma_o = -(s_o + 1) * math.log(2.0) + q * math.log(2.0 / (5.0 * c))
    log_sigma_bar = (-(s_o + 2) * math.log(2.0) + q * math.log(2.0 / 5.0)
                     - (2.0 / (2.0 - p)) * math.exp(tau_o))
    rb = None
    if M is not None and T is not None:
        rb = rho_bar(M, T, p)
    return ConstantChain(p=p, nu=nu, gamma1=gamma1, delta=delta, c=c, s_o=s_o,
                         tau_o_transformed=tau_o, log_sigma_o=log_sigma_o,
                         log_sigma_bar=log_sigma_bar, theta_coeff=delta,
                         rho_bar=rb)


def to_transformed(x, t, y: float, T: float, rho_bar_val: float, p: float):
    """Forward change of variables (x, t) -> (z, tau), defined for t < T/2.

    z = 2^{(2-p)/p} (x - y) / rho_bar,  tau = -log((T/2 - t) / (T/2)).
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr >= T / 2.0):
        raise DomainError("forward map needs t < T/2 (tau would be infinite)")
    if rho_bar_val <= 0:
        raise InvalidInputError("rho_bar must be positive")
    z = 2.0 ** ((2.0 - p) / p) * (np.asarray(x, dtype=float) - y) / rho_bar_val
    tau = -np.log((T / 2.0 - t_arr) / (T / 2.0))
    if np.ndim(x) == 0 and np.ndim(t) == 0:
        return float(z), float(tau)
    return z, tau


def from_transformed(z, tau, y: float, T: float, rho_bar_val: float, p: float):
    """Inverse of `to_transformed`."""
    if rho_bar_val <= 0:
        raise InvalidInputError("rho_bar must be positive")
    x = y + np.asarray(z, dtype=float) * rho_bar_val * 2.0 ** (-(2.0 - p) / p)
    t = T / 2.0 * (1.0 - np.exp(-np.asarray(tau, dtype=float)))
    if np.ndim(z) == 0 and np.ndim(tau) == 0:
        return float(x), float(t)
    return x, t


def transform_field(u_value, tau, M: float, p: float):
    """Unknown rescaling v = (u / M) e^{tau/(2-p)}."""
    if M <= 0:
        raise InvalidInputError("M must be positive")
    v = np.asarray(u_value, dtype=float) / M * np.exp(np.asarray(tau, dtype=float) / (2.0 - p))
    if np.ndim(u_value) == 0 and np.ndim(tau) == 0:
        return float(v)
    return v
