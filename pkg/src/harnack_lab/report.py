"""Outcome record for one inequality verification."""
from __future__ import annotations

import math
from dataclasses import dataclass, field


def _json_num(v):
    if v is None:
        return None
    if isinstance(v, bool):
        return v
    if isinstance(v, (int,)):
        return v
    if isinstance(v, float):
        return v if math.isfinite(v) else None
    return v


@dataclass(frozen=True)
class CheckReport:
    """Pass/fail verdict with the measured sides of the inequality.

    margin is rhs - lhs, or the log difference where log_scale is set;
    passed is equivalent to margin >= -details["tolerance"].
    """

    name: str
    passed: bool
    lhs: float
    rhs: float
    margin: float
    log_scale: bool = False
    details: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        out = {"name": self.name, "passed": bool(self.passed)}
        if self.log_scale:
            out["lhs_log"] = _json_num(self.lhs)
            out["rhs_log"] = _json_num(self.rhs)
        else:
            out["lhs"] = _json_num(self.lhs)
            out["rhs"] = _json_num(self.rhs)
        out["margin"] = _json_num(self.margin)
        out["details"] = {k: _json_num(v) for k, v in self.details.items()}
        return out
