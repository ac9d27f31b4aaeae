"""Request and response models for the HTTP surface."""

from __future__ import annotations

from typing import Dict, List, Optional

from pydantic import BaseModel, Field, model_validator


class HealthResponse(BaseModel):
    status: str
    version: str


class ExperimentRequest(BaseModel):
    config: Dict = Field(default_factory=dict)
    out_dir: str


class ExperimentResponse(BaseModel):
    experiment: str
    summary: Dict
    violations: List[str]
    files: List[str]


class BidRequest(BaseModel):
    delta: float = Field(ge=0.0)
    dual_lambda: float = Field(gt=0.0)
    price_lo: float = 0.0
    price_hi: float = 1.0
    grid_step: Optional[float] = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def _check_support(self):
        if self.price_hi <= self.price_lo:
            raise ValueError("price_hi must exceed price_lo")
        return self


class BidResponse(BaseModel):
    bid: float


class EstimateRequest(BaseModel):
    weights: List[float]
    x: List[float]
    bank: List[List[float]] = Field(min_length=1)
    mode: str = "analytical"
    entropy_threshold: float = Field(default=0.3, ge=0.0, le=1.0)
    exploration_utility: float = 1.0
    zo_mu: float = Field(default=0.01, gt=0.0)
    zo_dirs: int = Field(default=5, ge=1)
    seed: int = 0
    index: int = 0
    kernel_lambda: float = Field(default=0.1, gt=0.0)
    beta: float = Field(default=0.5, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_dims(self):
        d = len(self.weights)
        if d == 0:
            raise ValueError("weights must be non-empty")
        if len(self.x) != d:
            raise ValueError("x and weights must share a dimension")
        if any(len(row) != d for row in self.bank):
            raise ValueError("bank rows and weights must share a dimension")
        if self.mode not in ("analytical", "zeroth_order"):
            raise ValueError("mode must be analytical or zeroth_order")
        return self


class EstimateResponse(BaseModel):
    gradient: Optional[List[float]]
    utility: float
    pctr: float
    entropy: float
    provenance: str
