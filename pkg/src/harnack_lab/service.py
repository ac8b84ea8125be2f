"""HTTP service wrapping the laboratory: constants, experiment runs,
convergence ladders, and exact-solution tables.

The CLI is a thin client of this app (in-process via an ASGI transport
by default, or against a remote instance). All computation stays in the
library; endpoints only validate, dispatch, and serialize.
"""
from __future__ import annotations

import math
from typing import Optional

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__
from .config import ConfigError, ExperimentConfig
from .constants import compute_chain, rho_bar as rho_bar_fn, theta as theta_fn
from .core import DomainError, InvalidInputError, StepFailureError
from .experiments import (CheckRow, RunResult, barenblatt_table,
                          convergence_study, run_experiment)


class ChainRequest(BaseModel):
    p: float
    nu: float = 0.25
    gamma1: float = 2.0
    delta: Optional[float] = None
    c: float = 4.0
    M: Optional[float] = None
    T: Optional[float] = None


class ChainResponse(BaseModel):
    record: dict


class RunRequest(BaseModel):
    config: ExperimentConfig


class RowModel(BaseModel):
    name: str
    p: float
    M: float
    rho_over_rhobar: Optional[float] = None
    passed: bool
    margin: Optional[float] = None
    sigma_emp: Optional[float] = None
    exponent_fit: Optional[float] = None
    details: dict = Field(default_factory=dict)


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


def _row_model(r: CheckRow) -> RowModel:
    return RowModel(name=r.name, p=r.p, M=r.M, rho_over_rhobar=r.rho_over_rhobar,
                    passed=r.passed, margin=_clean(r.margin),
                    sigma_emp=_clean(r.sigma_emp),
                    exponent_fit=_clean(r.exponent_fit),
                    details=_clean(r.details))


class RunResponse(BaseModel):
    status: str
    all_passed: bool
    rows: list[RowModel]
    manifest: dict
    plots: dict[str, str]


class ConvergenceRequest(BaseModel):
    p: float = 1.5
    C: float = 1.0
    levels: int = 4
    n0: int = 128
    dt0: float = 4e-3
    t_start: float = 1.0
    t_end: float = 1.2
    eps_sweep: bool = False


class TableRequest(BaseModel):
    p: float = 1.5
    C: float = 1.0
    t0: float = 0.0
    x_min: float = -10.0
    x_max: float = 10.0
    n_points: int = 101
    times: list[float] = Field(default_factory=lambda: [1.0])


def create_app() -> FastAPI:
    app = FastAPI(title="harnack-lab",
                  description="numerical laboratory for 1-D singular diffusion",
                  version=__version__)

    @app.exception_handler(InvalidInputError)
    @app.exception_handler(DomainError)
    @app.exception_handler(ConfigError)
    async def _bad_request(request, exc):
        return JSONResponse(status_code=400,
                            content={"error": type(exc).__name__, "message": str(exc)})

    @app.exception_handler(StepFailureError)
    async def _solver_failure(request, exc):
        return JSONResponse(status_code=500,
                            content={"error": "StepFailureError", "message": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/constants", response_model=ChainResponse)
    def constants(req: ChainRequest):
        chain = compute_chain(req.p, nu=req.nu, gamma1=req.gamma1,
                              delta=req.delta, c=req.c, M=req.M, T=req.T)
        record = chain.to_record()
        if req.M is not None and req.T is not None:
            record["rho_bar"] = rho_bar_fn(req.M, req.T, req.p)
            record["theta"] = theta_fn(chain.delta, req.M, req.p)
        return ChainResponse(record=record)

    @app.post("/run", response_model=RunResponse)
    def run(req: RunRequest):
        result: RunResult = run_experiment(req.config)
        return RunResponse(status=result.status, all_passed=result.all_passed,
                           rows=[_row_model(r) for r in result.rows],
                           manifest=_clean(result.manifest), plots=result.plots)

    @app.post("/convergence")
    def convergence(req: ConvergenceRequest):
        return _clean(convergence_study(p=req.p, C=req.C, levels=req.levels,
                                        n0=req.n0, dt0=req.dt0,
                                        t_start=req.t_start, t_end=req.t_end,
                                        eps_sweep=req.eps_sweep))

    @app.post("/barenblatt-table")
    def table(req: TableRequest):
        rows = barenblatt_table(p=req.p, C=req.C, t0=req.t0, x_min=req.x_min,
                                x_max=req.x_max, n_points=req.n_points,
                                times=req.times)
        return {"columns": ["x", "t", "u"], "rows": rows}

    return app
