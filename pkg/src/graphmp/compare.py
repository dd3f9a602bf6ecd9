"""Side-by-side method-vs-oracle comparison with pass/fail verdicts.

Percolation: the message-passing report against exact enumeration (when
2^|E| is affordable) or Monte-Carlo; the MC route uses sigma bands instead
of an absolute tolerance. Spectra: the density curve against the broadened
eigenvalue sum from the Jacobi oracle, pointwise on the shared grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import WeightedGraph
from .oracle import (
    dense_eigenvalues,
    exact_density,
    exact_percolation_enumeration,
    mc_percolation,
)
from .percolation import PercConfig, PercolationReport, run_percolation
from .spectra import SpectralConfig, SpectrumReport, sweep_spectrum

EXACT_ENUM_MAX_EDGES = 20  # 2^20 configurations; beyond this the MC oracle runs


@dataclass
class CompareResult:
    kind: str
    oracle: str
    max_abs_deviation: float
    tolerance: float | None
    max_sigma: float | None
    passed: bool
    flagged: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "oracle": self.oracle,
            "max_abs_deviation": self.max_abs_deviation,
            "tolerance": self.tolerance,
            "max_sigma": self.max_sigma,
            "passed": self.passed,
            "flagged": self.flagged,
            "detail": self.detail,
        }


def compare_percolation(
    graph: WeightedGraph, config: PercConfig, tolerance: float = 1e-9,
    trials: int = 1_000_000,
) -> tuple[CompareResult, PercolationReport]:
    """Exact-oracle route: abs tolerance. MC route: 3/4 sigma bands."""
    report = run_percolation(graph, config)
    m = len(graph.simple_edges)
    s_cap = config.s_max or graph.n
    if m <= EXACT_ENUM_MAX_EDGES:
        ex = exact_percolation_enumeration(graph, config.p)
        devs = [abs(report.h1[i] - ex.h1[i]) for i in range(graph.n)]
        if report.mean_size[0] is not None:
            devs += [abs(report.mean_size[i] - ex.mean_size[i]) for i in range(graph.n)]
        if report.pi is not None:
            devs += [
                abs(report.pi[i][s - 1] - ex.pi[i, s])
                for i in range(graph.n)
                for s in range(1, min(s_cap, graph.n) + 1)
            ]
        worst = float(max(devs))
        return (
            CompareResult(
                kind="percolation", oracle="exact_enumeration",
                max_abs_deviation=worst, tolerance=tolerance, max_sigma=None,
                passed=worst <= tolerance, flagged=False,
                detail={"S_method": report.S, "S_oracle": ex.percolating_fraction},
            ),
            report,
        )
    mc = mc_percolation(graph, config.p, trials, seed=config.seed)
    sigmas = []
    devs = []
    for i in range(graph.n):
        est = mc.mean_size[i]
        if report.mean_size[i] is not None:
            devs.append(abs(report.mean_size[i] - est.mean))
            sigmas.append(devs[-1] / max(est.stderr, 1e-15))
        if report.pi is not None and mc.pi:
            for s in range(1, min(s_cap, graph.n) + 1):
                est = mc.pi[i][s - 1]
                devs.append(abs(report.pi[i][s - 1] - est.mean))
                sigmas.append(devs[-1] / max(est.stderr, 1e-15))
    worst_sigma = float(max(sigmas))
    return (
        CompareResult(
            kind="percolation", oracle=f"mc_{trials}",
            max_abs_deviation=float(max(devs)), tolerance=None, max_sigma=worst_sigma,
            passed=worst_sigma <= 3.0, flagged=3.0 < worst_sigma <= 4.0,
            detail={"S_method": report.S, "component_fraction_mc": mc.component_fraction.mean},
        ),
        report,
    )


def compare_spectrum(
    graph: WeightedGraph, config: SpectralConfig, tolerance: float = 1e-8,
) -> tuple[CompareResult, SpectrumReport]:
    report = sweep_spectrum(graph, config)
    eigs = dense_eigenvalues(graph.to_dense())
    devs = []
    for x, rho in zip(report.x, report.rho):
        if np.isfinite(rho):
            devs.append(abs(rho - exact_density(eigs, x, config.eta)))
    worst = float(max(devs)) if devs else float("inf")
    n_failed = sum(1 for e in report.errors if e)
    return (
        CompareResult(
            kind="spectrum", oracle="jacobi_eigenvalues",
            max_abs_deviation=worst, tolerance=tolerance, max_sigma=None,
            passed=worst <= tolerance and n_failed == 0, flagged=False,
            detail={
                "eigenvalues": [float(v) for v in eigs],
                "mass_estimate": report.mass_estimate,
                "unconverged_points": n_failed,
            },
        ),
        report,
    )
