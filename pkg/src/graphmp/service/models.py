"""Request/response models for the HTTP surface.

Graph content travels inline (edge-list or matrix text) so the service
stays stateless; the manifest echoes the content hash and the fully
resolved configuration.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class GraphPayload(BaseModel):
    format: Literal["edge_list", "matrix"] = "edge_list"
    text: str
    path: Optional[str] = None  # client-side origin, echoed into the manifest


class NeighRequest(BaseModel):
    graph: GraphPayload
    r: int = Field(default=1, ge=0)


class NeighResponse(BaseModel):
    classing: dict
    size_report: dict
    manifest: dict


class PercolationRequest(BaseModel):
    graph: GraphPayload
    p: float = Field(ge=0.0, le=1.0)
    r: int = Field(default=1, ge=0)
    mode: Literal["auto", "bounded", "unbounded"] = "auto"
    s_max: Optional[int] = Field(default=None, ge=1)
    z: float = 1.0
    tol: float = 1e-10
    max_iter: int = 10000
    damping: float = Field(default=0.0, ge=0.0, lt=1.0)
    enum_threshold: int = 16
    mc_samples: int = 100_000
    seed: int = 0
    init: Literal["unit", "random"] = "unit"
    literal_pbar: bool = False


class PercolationResponse(BaseModel):
    report: dict
    manifest: dict


class SpectrumRequest(BaseModel):
    matrix: GraphPayload = Field(description="symmetric matrix as graph payload")
    eta: float = Field(default=0.05, gt=0.0)
    x_min: float = -3.0
    x_max: float = 3.0
    points: int = Field(default=601, ge=1)
    r: int = Field(default=1, ge=0)
    mode: Literal["auto", "bounded", "unbounded"] = "auto"
    tol: float = 1e-10
    max_iter: int = 10000
    damping: float = Field(default=0.0, ge=0.0, lt=1.0)
    warm_start: bool = True
    literal_d: bool = False


class SpectrumResponse(BaseModel):
    csv: str
    metadata: dict
    manifest: dict


class OraclePercolationRequest(BaseModel):
    graph: GraphPayload
    p: float = Field(ge=0.0, le=1.0)
    method: Literal["auto", "exact", "mc"] = "auto"
    trials: int = Field(default=100_000, ge=1)
    seed: int = 0


class OracleSpectrumRequest(BaseModel):
    matrix: GraphPayload
    eta: float = Field(default=0.05, gt=0.0)
    x_min: float = -3.0
    x_max: float = 3.0
    points: int = Field(default=601, ge=1)


class OracleResponse(BaseModel):
    report: dict
    manifest: dict


class ComparePercolationRequest(PercolationRequest):
    tolerance: float = 1e-9
    trials: int = 1_000_000


class CompareSpectrumRequest(SpectrumRequest):
    tolerance: float = 1e-8


class CompareResponse(BaseModel):
    comparison: dict
    report: dict
    manifest: dict


class CompareReportsRequest(BaseModel):
    """Diff two previously produced report JSON documents (with manifests)."""

    report_a: dict
    report_b: dict
    tolerance: float = 1e-9


class ErrorBody(BaseModel):
    kind: Literal["input", "convergence", "loop_bound", "internal"]
    message: str
