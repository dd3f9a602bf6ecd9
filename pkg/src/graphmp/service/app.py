"""FastAPI service wrapping the engine.

POST endpoints mirror the CLI subcommands; the CLI is a thin client that
talks to this app either in-process (ASGI transport) or over the network.
Error payloads carry a `kind` the client maps onto exit codes: input (1),
convergence (2), loop_bound (3).
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..compare import compare_percolation, compare_spectrum
from ..errors import ConvergenceError, GraphmpError, LoopBoundError
from ..graphs import WeightedGraph, load_edge_list, load_matrix_text, validate
from ..manifest import RunManifest, content_hash
from ..neighborhoods import classify, neighborhood_size_report
from ..oracle import (
    dense_eigenvalues,
    exact_density,
    exact_percolation_enumeration,
    mc_percolation,
)
from ..percolation import PercConfig, run_percolation
from ..spectra import SpectralConfig, sweep_spectrum
from .models import (
    CompareReportsRequest,
    ComparePercolationRequest,
    CompareResponse,
    CompareSpectrumRequest,
    GraphPayload,
    NeighRequest,
    NeighResponse,
    OraclePercolationRequest,
    OracleResponse,
    OracleSpectrumRequest,
    PercolationRequest,
    PercolationResponse,
    SpectrumRequest,
    SpectrumResponse,
)

app = FastAPI(
    title="graphmp",
    version=__version__,
    description="Message passing on neighborhood intersections: "
    "percolation statistics and spectral densities with built-in oracles.",
)


def _error(exc: GraphmpError) -> HTTPException:
    status = {"input": 400, "loop_bound": 409, "convergence": 422}.get(exc.kind, 500)
    return HTTPException(status_code=status, detail={"kind": exc.kind, "message": str(exc)})


def _load(payload: GraphPayload) -> WeightedGraph:
    try:
        if payload.format == "matrix":
            return load_matrix_text(payload.text)
        return load_edge_list(payload.text)
    except GraphmpError as exc:
        raise _error(exc) from exc


def _manifest(command: str, payload: GraphPayload, config: dict, seed: int | None = None) -> RunManifest:
    return RunManifest(
        command=command,
        input_path=payload.path,
        input_sha256=content_hash(payload.text),
        config=config,
        seed=seed,
    )


@app.get("/healthz")
def healthz() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/neigh", response_model=NeighResponse)
def neigh(req: NeighRequest) -> NeighResponse:
    graph = _load(req.graph)
    manifest = _manifest("neigh", req.graph, {"r": req.r})
    system = classify(graph, req.r)
    sizes = neighborhood_size_report(graph, req.r)
    return NeighResponse(
        classing=system.to_dict(),
        size_report=sizes.to_dict(),
        manifest=manifest.finish().to_dict(),
    )


@app.post("/percolation", response_model=PercolationResponse)
def percolation(req: PercolationRequest) -> PercolationResponse:
    graph = _load(req.graph)
    config = PercConfig(
        p=req.p, r=req.r, mode=req.mode, z=req.z, s_max=req.s_max, tol=req.tol,
        max_iter=req.max_iter, damping=req.damping, enum_threshold=req.enum_threshold,
        mc_samples=req.mc_samples, seed=req.seed, init=req.init,
        literal_pbar=req.literal_pbar,
    )
    manifest = _manifest("percolation", req.graph, config.to_dict(), seed=req.seed)
    try:
        report = run_percolation(graph, config)
    except (LoopBoundError, ConvergenceError, GraphmpError) as exc:
        raise _error(exc) from exc
    return PercolationResponse(report=report.to_dict(), manifest=manifest.finish().to_dict())


@app.post("/spectrum", response_model=SpectrumResponse)
def spectrum(req: SpectrumRequest) -> SpectrumResponse:
    graph = _load(req.matrix)
    config = SpectralConfig(
        eta=req.eta, x_min=req.x_min, x_max=req.x_max, points=req.points, r=req.r,
        mode=req.mode, tol=req.tol, max_iter=req.max_iter, damping=req.damping,
        warm_start=req.warm_start, literal_d=req.literal_d,
    )
    manifest = _manifest("spectrum", req.matrix, config.to_dict())
    try:
        report = sweep_spectrum(graph, config)
    except (LoopBoundError, ConvergenceError, GraphmpError) as exc:
        raise _error(exc) from exc
    return SpectrumResponse(
        csv=report.to_csv(),
        metadata=report.metadata(),
        manifest=manifest.finish().to_dict(),
    )


@app.post("/oracle/percolation", response_model=OracleResponse)
def oracle_percolation(req: OraclePercolationRequest) -> OracleResponse:
    graph = _load(req.graph)
    config = {"p": req.p, "method": req.method, "trials": req.trials, "seed": req.seed}
    manifest = _manifest("oracle percolation", req.graph, config, seed=req.seed)
    method = req.method
    if method == "auto":
        method = "exact" if len(graph.simple_edges) <= 20 else "mc"
    try:
        if method == "exact":
            report = exact_percolation_enumeration(graph, req.p).to_dict()
            report["oracle"] = "exact_enumeration"
        else:
            report = mc_percolation(graph, req.p, req.trials, seed=req.seed).to_dict()
            report["oracle"] = "mc"
    except GraphmpError as exc:
        raise _error(exc) from exc
    return OracleResponse(report=report, manifest=manifest.finish().to_dict())


@app.post("/oracle/spectrum", response_model=OracleResponse)
def oracle_spectrum(req: OracleSpectrumRequest) -> OracleResponse:
    graph = _load(req.matrix)
    config = {"eta": req.eta, "x_min": req.x_min, "x_max": req.x_max, "points": req.points}
    manifest = _manifest("oracle spectrum", req.matrix, config)
    try:
        eigs = dense_eigenvalues(graph.to_dense())
    except GraphmpError as exc:
        raise _error(exc) from exc
    xs = np.linspace(req.x_min, req.x_max, req.points) if req.points > 1 else [0.5 * (req.x_min + req.x_max)]
    rows = [{"x": float(x), "rho": exact_density(eigs, float(x), req.eta)} for x in xs]
    report = {
        "oracle": "jacobi_eigenvalues",
        "eigenvalues": [float(v) for v in eigs],
        "rows": rows,
        "csv": "x,rho\n" + "".join(f"{r['x']:.17g},{r['rho']:.17g}\n" for r in rows),
    }
    return OracleResponse(report=report, manifest=manifest.finish().to_dict())


@app.post("/compare/percolation", response_model=CompareResponse)
def compare_percolation_ep(req: ComparePercolationRequest) -> CompareResponse:
    graph = _load(req.graph)
    config = PercConfig(
        p=req.p, r=req.r, mode=req.mode, z=req.z, s_max=req.s_max, tol=req.tol,
        max_iter=req.max_iter, damping=req.damping, enum_threshold=req.enum_threshold,
        mc_samples=req.mc_samples, seed=req.seed, init=req.init,
        literal_pbar=req.literal_pbar,
    )
    cfg_dict = config.to_dict() | {"tolerance": req.tolerance, "trials": req.trials}
    manifest = _manifest("compare percolation", req.graph, cfg_dict, seed=req.seed)
    try:
        result, report = compare_percolation(graph, config, req.tolerance, req.trials)
    except (LoopBoundError, ConvergenceError, GraphmpError) as exc:
        raise _error(exc) from exc
    return CompareResponse(
        comparison=result.to_dict(), report=report.to_dict(),
        manifest=manifest.finish().to_dict(),
    )


@app.post("/compare/spectrum", response_model=CompareResponse)
def compare_spectrum_ep(req: CompareSpectrumRequest) -> CompareResponse:
    graph = _load(req.matrix)
    config = SpectralConfig(
        eta=req.eta, x_min=req.x_min, x_max=req.x_max, points=req.points, r=req.r,
        mode=req.mode, tol=req.tol, max_iter=req.max_iter, damping=req.damping,
        warm_start=req.warm_start, literal_d=req.literal_d,
    )
    cfg_dict = config.to_dict() | {"tolerance": req.tolerance}
    manifest = _manifest("compare spectrum", req.matrix, cfg_dict)
    try:
        result, report = compare_spectrum(graph, config, req.tolerance)
    except (LoopBoundError, ConvergenceError, GraphmpError) as exc:
        raise _error(exc) from exc
    return CompareResponse(
        comparison=result.to_dict(), report=report.to_dict(),
        manifest=manifest.finish().to_dict(),
    )


@app.post("/compare/reports", response_model=CompareResponse)
def compare_reports(req: CompareReportsRequest) -> CompareResponse:
    """Structural diff of two prior runs; refuses mismatched input hashes."""
    ha = req.report_a.get("manifest", {}).get("input_sha256")
    hb = req.report_b.get("manifest", {}).get("input_sha256")
    if not ha or not hb:
        raise HTTPException(400, detail={"kind": "input", "message": "reports must embed manifests"})
    if ha != hb:
        raise HTTPException(
            400,
            detail={"kind": "input", "message": f"input hashes differ: {ha[:12]} vs {hb[:12]}"},
        )
    devs = _numeric_devs(req.report_a.get("report", {}), req.report_b.get("report", {}))
    worst = max(devs) if devs else 0.0
    return CompareResponse(
        comparison={
            "kind": "reports",
            "max_abs_deviation": worst,
            "tolerance": req.tolerance,
            "passed": worst <= req.tolerance,
            "compared_values": len(devs),
        },
        report={},
        manifest=RunManifest(
            command="compare reports", input_path=None, input_sha256=ha,
            config={"tolerance": req.tolerance},
        ).finish().to_dict(),
    )


def _numeric_devs(a, b, out=None) -> list:
    """Pairwise |a-b| over the shared numeric structure of two JSON trees."""
    if out is None:
        out = []
    if isinstance(a, dict) and isinstance(b, dict):
        for k in a.keys() & b.keys():
            _numeric_devs(a[k], b[k], out)
    elif isinstance(a, list) and isinstance(b, list):
        for x, y in zip(a, b):
            _numeric_devs(x, y, out)
    elif isinstance(a, (int, float)) and isinstance(b, (int, float)) and not isinstance(a, bool):
        if np.isfinite(a) and np.isfinite(b):
            out.append(abs(float(a) - float(b)))
    return out
