"""graphmp: message passing on neighborhood intersections.

Two target computations on sparse undirected graphs share one engine:

- bond-percolation cluster statistics (per-node cluster-size distributions,
  small-cluster probabilities, expected cluster sizes, percolating fraction);
- spectral densities of sparse symmetric matrices via complex-valued
  messages and small dense local solves.

Messages travel between intersection neighborhoods N_i cap N_j. When every
loop through a node fits inside its primary neighborhood (the loop bound),
the intersections collapse into equivalence classes whose incidence
structure is a forest and the method is exact; otherwise overcounting is
suppressed by order-dependent edge schedules and results are approximate.

Brute-force oracles (exhaustive and Monte-Carlo percolation, a Jacobi
eigensolver, dense resolvents) provide ground truth at desk scale.
"""

__version__ = "0.1.0"

from .graphs import (
    WeightedGraph,
    absorb_self_loops,
    from_symmetric_matrix,
    load_edge_list,
    load_matrix_text,
    make_graph,
    serialize_edge_list,
    serialize_matrix,
    validate,
)
from .neighborhoods import (
    Neighborhood,
    NeighborhoodSystem,
    UnboundedSchedule,
    build_difference,
    build_intersection,
    build_primary,
    build_schedules,
    classify,
    is_hypernetwork_acyclic,
    neighborhood_size_report,
)
from .percolation import PercConfig, PercolationReport, run_percolation
from .spectra import SpectralConfig, SpectrumReport, sweep_spectrum

__all__ = [
    "WeightedGraph",
    "absorb_self_loops",
    "from_symmetric_matrix",
    "load_edge_list",
    "load_matrix_text",
    "make_graph",
    "serialize_edge_list",
    "serialize_matrix",
    "validate",
    "Neighborhood",
    "NeighborhoodSystem",
    "UnboundedSchedule",
    "build_difference",
    "build_intersection",
    "build_primary",
    "build_schedules",
    "classify",
    "is_hypernetwork_acyclic",
    "neighborhood_size_report",
    "PercConfig",
    "PercolationReport",
    "run_percolation",
    "SpectralConfig",
    "SpectrumReport",
    "sweep_spectrum",
    "__version__",
]
