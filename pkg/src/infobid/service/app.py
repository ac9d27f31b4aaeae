"""HTTP surface over the experiment runners and bidding primitives.

The service is stateless: experiment runs write artifacts to the
server-local out_dir named in the request and return the summary inline.
"""

from __future__ import annotations

import os

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..coverage import CoverageState, GradientBank
from ..experiments import EXPERIMENTS, run_experiment
from ..gradest import GradEstConfig, estimate_marginal_utility
from ..model import LogisticModel
from ..pacing import UniformWinCurve, optimal_bid_fpa
from .schemas import (
    BidRequest,
    BidResponse,
    EstimateRequest,
    EstimateResponse,
    ExperimentRequest,
    ExperimentResponse,
    HealthResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="infobid", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/experiments/{name}", response_model=ExperimentResponse)
    def experiment(name: str, req: ExperimentRequest) -> ExperimentResponse:
        if name not in EXPERIMENTS:
            raise HTTPException(status_code=404, detail=f"unknown experiment {name!r}")
        try:
            summary, violations = run_experiment(name, req.config, req.out_dir)
        except (ValueError, TypeError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        files = sorted(
            f for f in os.listdir(req.out_dir)
            if os.path.isfile(os.path.join(req.out_dir, f))
        )
        return ExperimentResponse(
            experiment=name, summary=summary, violations=violations, files=files
        )

    @app.post("/bid/fpa", response_model=BidResponse)
    def bid_fpa(req: BidRequest) -> BidResponse:
        curve = UniformWinCurve(req.price_lo, req.price_hi)
        bid = optimal_bid_fpa(req.delta, req.dual_lambda, curve, req.grid_step)
        return BidResponse(bid=bid)

    @app.post("/estimate", response_model=EstimateResponse)
    def estimate(req: EstimateRequest) -> EstimateResponse:
        model = LogisticModel(np.asarray(req.weights, dtype=np.float64))
        bank = GradientBank(np.asarray(req.bank, dtype=np.float64))
        state = CoverageState(bank, req.kernel_lambda, req.beta)
        cfg = GradEstConfig(
            mode=req.mode,
            entropy_threshold=req.entropy_threshold,
            exploration_utility=req.exploration_utility,
            zo_mu=req.zo_mu,
            zo_dirs=req.zo_dirs,
            seed=req.seed,
        )
        est = estimate_marginal_utility(
            model, np.asarray(req.x, dtype=np.float64), state, cfg, index=req.index
        )
        return EstimateResponse(
            gradient=None if est.gradient is None else [float(g) for g in est.gradient],
            utility=est.utility,
            pctr=est.pctr,
            entropy=est.entropy,
            provenance=est.provenance,
        )

    return app
