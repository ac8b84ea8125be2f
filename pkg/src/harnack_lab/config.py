"""Experiment configuration: pydantic models plus the flat key-value
text format.

Text format: one `key = value` pair per line, sections via dotted
prefixes, `#` comments, commas for lists. Example:

    params.T = 1.0
    params.n_cells = 1536
    scenario.kind = pinned
    scenario.pin_value = 2.0
    sweep.p = 1.2, 1.5, 1.8
    sweep.rho_over_rhobar = 4, 8, 16
    checks = harnack, log_lemma
    output_dir = out
    seed = 42

A JSON object with the same nesting is accepted as an alternative.
"""
from __future__ import annotations

import json
from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

CHECK_NAMES = (
    "structure",
    "decay",
    "weak_supersolution",
    "energy_estimate",
    "log_lemma",
    "harnack",
    "transformed_equation",
    "degiorgi",
    "comparison",
    "scaling_equivariance",
    "conservation",
)

PLOT_NAMES = ("decay_fit", "sigma_emp_vs_rho", "bad_set_measure")


class ConfigError(ValueError):
    """Malformed or out-of-range experiment configuration."""


class ParamsConfig(BaseModel):
    T: float = 1.0
    y: float = 0.0
    n_cells: int = 1536
    dt: float = 2e-3
    eps_reg: float = 1e-12
    newton_tol: float = 1e-9
    newton_max_iter: int = 60
    tau_pre: float = 1.0
    domain: Optional[tuple[float, float]] = None   # None: sized from the sweep
    halfwidth_ratio: float = 4.5                   # auto half-width / max rho

    @field_validator("T", "dt", "tau_pre", "halfwidth_ratio")
    @classmethod
    def _positive(cls, v, info):
        if v <= 0:
            raise ValueError(f"{info.field_name} must be positive")
        return v

    @field_validator("n_cells")
    @classmethod
    def _cells(cls, v):
        if v < 16:
            raise ValueError("n_cells must be >= 16")
        return v


class ScenarioConfig(BaseModel):
    kind: Literal["barenblatt", "pinned", "custom"] = "pinned"
    # pinned: anchor value as a multiple of M, and the initial profile
    pin_value: float = 2.0
    u0: Literal["zero", "barenblatt"] = "barenblatt"
    # barenblatt family knobs (both scenario kinds)
    C: float = 1.0
    t0: float = 1.0
    # custom: explicit nodal table
    u0_values: Optional[list[float]] = None
    u0_time: float = 0.0

    @field_validator("pin_value", "C")
    @classmethod
    def _positive(cls, v, info):
        if v <= 0:
            raise ValueError(f"{info.field_name} must be positive")
        return v

    @model_validator(mode="after")
    def _custom_table(self):
        if self.kind == "custom" and not self.u0_values:
            raise ValueError("custom scenario needs u0_values")
        return self


class ChainConfig(BaseModel):
    nu: float = 0.25
    gamma1: float = 2.0
    delta: Optional[float] = None   # None: per-p empirical table
    c: float = 4.0

    @field_validator("nu")
    @classmethod
    def _nu(cls, v):
        if not (0.0 < v < 1.0):
            raise ValueError("nu must lie in (0, 1)")
        return v

    @field_validator("delta")
    @classmethod
    def _delta(cls, v):
        if v is not None and not (0.0 < v < 1.0):
            raise ValueError("delta must lie in (0, 1)")
        return v

    @field_validator("c")
    @classmethod
    def _c(cls, v):
        if v < 4.0:
            raise ValueError("c must be >= 4")
        return v


class EnergyConfig(BaseModel):
    a: float = 0.25
    H: float = 0.5
    omega_factor: float = 1.0      # omega = omega_factor * M
    rho_factor: float = 2.0        # cutoff ball radius = rho_factor * rho_bar

    @field_validator("a")
    @classmethod
    def _a(cls, v):
        if not (0.0 < v < 1.0):
            raise ValueError("a must lie in (0, 1)")
        return v

    @field_validator("H")
    @classmethod
    def _H(cls, v):
        if not (0.0 < v <= 1.0):
            raise ValueError("H must lie in (0, 1]")
        return v


class DegiorgiConfig(BaseModel):
    rho: float = 1.0
    n_cells: int = 1024
    n_steps: int = 400
    eps_reg: float = 1e-6

    @field_validator("rho")
    @classmethod
    def _rho(cls, v):
        if v <= 0:
            raise ValueError("degiorgi rho must be positive")
        return v


class ExperimentConfig(BaseModel):
    params: ParamsConfig = Field(default_factory=ParamsConfig)
    scenario: ScenarioConfig = Field(default_factory=ScenarioConfig)
    chain: ChainConfig = Field(default_factory=ChainConfig)
    energy: EnergyConfig = Field(default_factory=EnergyConfig)
    degiorgi: DegiorgiConfig = Field(default_factory=DegiorgiConfig)
    checks: list[str] = Field(default_factory=lambda: list(CHECK_NAMES))
    sweep_p: list[float] = Field(default_factory=lambda: [1.2, 1.5, 1.8])
    sweep_rho_over_rhobar: list[float] = Field(default_factory=lambda: [4.0, 8.0, 16.0])
    sweep_M: list[float] = Field(default_factory=lambda: [1.0])
    output_dir: str = "out"
    seed: int = 0
    plots: list[str] = Field(default_factory=lambda: list(PLOT_NAMES))

    @field_validator("checks")
    @classmethod
    def _checks(cls, v):
        if not v:
            raise ValueError("checks must be non-empty")
        for name in v:
            if name not in CHECK_NAMES:
                raise ValueError(f"unknown check {name!r}; known: {CHECK_NAMES}")
        return v

    @field_validator("plots")
    @classmethod
    def _plots(cls, v):
        for name in v:
            if name not in PLOT_NAMES:
                raise ValueError(f"unknown plot {name!r}; known: {PLOT_NAMES}")
        return v

    @field_validator("sweep_p")
    @classmethod
    def _sweep_p(cls, v):
        if not v:
            raise ValueError("sweep_p must be non-empty")
        for p in v:
            if not (1.0 < p < 2.0):
                raise ValueError(f"swept p must lie in (1, 2), got {p}")
        return v

    @field_validator("sweep_rho_over_rhobar")
    @classmethod
    def _sweep_rho(cls, v):
        if not v:
            raise ValueError("sweep_rho_over_rhobar must be non-empty")
        for r in v:
            if r < 4.0:
                raise ValueError("rho/rho_bar must be >= 4")
        return v

    @field_validator("sweep_M")
    @classmethod
    def _sweep_M(cls, v):
        if not v or any(m <= 0 for m in v):
            raise ValueError("sweep_M must be non-empty and positive")
        return v


_LIST_KEYS = {"checks", "plots", "sweep_p", "sweep_rho_over_rhobar", "sweep_M",
              "u0_values", "domain"}


def _coerce(token: str):
    t = token.strip()
    low = t.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null", "auto"):
        return None
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        pass
    return t


def parse_config_text(text: str) -> dict:
    """Parse the flat key-value format into a nested dict."""
    tree: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        parts = key.split(".")
        leaf = parts[-1]
        is_list = leaf in _LIST_KEYS or parts[0] == "sweep"
        if "," in value or is_list:
            parsed = [_coerce(v) for v in value.split(",") if v.strip() != ""]
            if leaf == "domain" and parsed == [None]:
                parsed = None
        else:
            parsed = _coerce(value)
        node = tree
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"line {lineno}: key {key!r} conflicts with a scalar")
        node[leaf] = parsed
    return tree


def _flatten_sweep(tree: dict) -> dict:
    """Accept sweep.p / sweep.rho_over_rhobar / sweep.M spellings."""
    sweep = tree.pop("sweep", None)
    if isinstance(sweep, dict):
        for src, dst in (("p", "sweep_p"), ("rho_over_rhobar", "sweep_rho_over_rhobar"),
                         ("M", "sweep_M")):
            if src in sweep:
                tree[dst] = sweep[src]
    return tree


def config_from_dict(tree: dict) -> ExperimentConfig:
    tree = _flatten_sweep(dict(tree))
    try:
        return ExperimentConfig(**tree)
    except Exception as exc:   # pydantic ValidationError included
        raise ConfigError(str(exc)) from exc


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            tree = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from exc
    else:
        tree = parse_config_text(text)
    return config_from_dict(tree)
