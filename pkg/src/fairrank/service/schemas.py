"""Pydantic request/response models for the HTTP service.

Instance payloads mirror the on-disk JSON format; ranking slots are 1-based
item indices, matching every other external surface.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

from ..experiment import ExperimentConfig


class InstancePayload(BaseModel):
    m: int
    n: int
    p: int
    structure: Literal["disjoint", "independent-marginals", "explicit-joint"] = "disjoint"
    w: Optional[list[float]] = None
    W: Optional[list[list[float]]] = None
    P: list[list[float]]
    truth: Optional[list[list[int]]] = None


class FairnessParams(BaseModel):
    """How to build U and gamma for one ranking request."""

    u_mode: Literal["phi", "equal", "proportional"] = "phi"
    phi: float = 1.0
    group_sizes: Optional[list[float]] = None
    gamma_mode: Literal[
        "theoretical", "improved", "position-weighted", "heuristic", "explicit"
    ] = "heuristic"
    gamma: Optional[list[float]] = None
    c: float = 1.5
    delta: float = 0.1
    d: float = 4.0
    psi: Optional[float] = None
    t: int = 100
    v: Optional[list[float]] = None


class GenerateRequest(BaseModel):
    generator: str
    params: dict = Field(default_factory=dict)
    m: int = 500
    n: int = 25
    seed: int = 0


class RankRequest(BaseModel):
    instance: InstancePayload
    algorithm: Literal["nresilient", "uncons", "csv", "gak", "sj", "mc"]
    fairness: FairnessParams = Field(default_factory=FairnessParams)
    seed: int = 0
    lp_method: Literal["auto", "simplex", "highs"] = "auto"


class RankResponse(BaseModel):
    slots: list[int]
    m: int
    n: int
    utility: float


class EvaluateRequest(BaseModel):
    instance: InstancePayload
    slots: list[int]
    truth: Optional[list[list[int]]] = None
    truth_seed: int = 0


class MetricReportPayload(BaseModel):
    rd: float
    sl: float
    prop_rd: Optional[float]
    ndcg: Optional[float]
    raw_utility: float
    checkpoints: list[int]


class ExperimentRequest(BaseModel):
    config: ExperimentConfig


class ExperimentResponse(BaseModel):
    csv: str
    rows: int


class ErrorBody(BaseModel):
    error: str
    message: str
