"""Weighted undirected graphs and symmetric-matrix ingestion.

The same sparse-graph substrate backs both target computations: bond
percolation runs on the topology alone, while spectral-density runs read
edge weights as matrix entries (a symmetric matrix A maps to a graph with
one vertex per index, an edge wherever A_ij != 0, and self-loops for
nonzero diagonal entries).

Graphs are immutable after construction and safe to share across workers.
Node ids are 0-based everywhere. Every non-self-loop edge is stored once
with u < v; parallel edges are rejected.

Text formats:
  edge list  -- lines "u v [w]" (weight defaults to 1.0), '#' comments and
                blank lines ignored;
  matrix     -- header "n nnz" followed by nnz lines "i j value" giving one
                triangle (or both, if consistent) of a symmetric matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import AsymmetryError, GraphFormatError

# Tolerance for duplicate matrix entries: exact symmetric input is expected,
# this only absorbs decimal-text round-off.
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected weighted graph with optional self-loops.

    `edges` holds canonical (u, v, w) triples with u <= v; u == v marks a
    self-loop. `adjacency` indexes sorted non-self neighbors per node and is
    always consistent with the edge list.
    """

    n: int
    edges: tuple[tuple[int, int, float], ...]
    adjacency: tuple[tuple[int, ...], ...] = field(repr=False)
    self_loops: frozenset[int] = field(repr=False)
    connected: bool = field(repr=False)

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self.adjacency[i]

    def weight(self, u: int, v: int) -> float:
        """Weight of edge (u,v), 0.0 if absent (matrix semantics)."""
        return self._weights.get((min(u, v), max(u, v)), 0.0)

    @property
    def _weights(self) -> dict[tuple[int, int], float]:
        w = self.__dict__.get("_weights_cache")
        if w is None:
            w = {(u, v): wt for u, v, wt in self.edges}
            self.__dict__["_weights_cache"] = w
        return w

    @property
    def simple_edges(self) -> tuple[tuple[int, int], ...]:
        """Non-self-loop edges as (u, v) pairs, u < v."""
        return tuple((u, v) for u, v, _ in self.edges if u != v)

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self._weights

    def to_dense(self) -> np.ndarray:
        """Dense symmetric matrix with A_ij = w_(i,j), diagonal from self-loops."""
        a = np.zeros((self.n, self.n))
        for u, v, w in self.edges:
            a[u, v] = w
            a[v, u] = w
        return a

    def content_key(self) -> str:
        """Stable text form, used for hashing and round-trips."""
        return serialize_edge_list(self)


def make_graph(n: int, edges: Iterable[tuple[int, int, float]]) -> WeightedGraph:
    """Canonicalize and validate an edge collection into a WeightedGraph."""
    if n <= 0:
        raise GraphFormatError("empty graph: no nodes")
    seen: dict[tuple[int, int], float] = {}
    for u, v, w in edges:
        if u < 0 or v < 0:
            raise GraphFormatError(f"negative node id in edge ({u}, {v})")
        if u >= n or v >= n:
            raise GraphFormatError(f"node id out of range in edge ({u}, {v}): n={n}")
        key = (min(u, v), max(u, v))
        w = float(w)
        if key in seen:
            if abs(seen[key] - w) > SYMMETRY_TOL:
                raise GraphFormatError(
                    f"duplicate edge {key} with conflicting weights "
                    f"{seen[key]} vs {w}"
                )
            continue
        seen[key] = w
    canon = tuple(sorted((u, v, w) for (u, v), w in seen.items()))
    adj: list[list[int]] = [[] for _ in range(n)]
    loops = set()
    for u, v, _ in canon:
        if u == v:
            loops.add(u)
        else:
            adj[u].append(v)
            adj[v].append(u)
    adjacency = tuple(tuple(sorted(a)) for a in adj)
    return WeightedGraph(
        n=n,
        edges=canon,
        adjacency=adjacency,
        self_loops=frozenset(loops),
        connected=_is_connected(n, adjacency),
    )


def _is_connected(n: int, adjacency: Sequence[Sequence[int]]) -> bool:
    if n == 1:
        return True
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adjacency[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == n


def load_edge_list(text: str) -> WeightedGraph:
    """Parse "u v [w]" lines into a graph; ids are 0-based.

    Self-loop lines "k k w" are accepted and recorded. Duplicate edges are
    allowed only when their weights agree.
    """
    edges: list[tuple[int, int, float]] = []
    max_id = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise GraphFormatError(f"line {lineno}: expected 'u v [w]', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError as exc:
            raise GraphFormatError(f"line {lineno}: {exc}") from exc
        if u < 0 or v < 0:
            raise GraphFormatError(f"line {lineno}: negative node id")
        edges.append((u, v, w))
        max_id = max(max_id, u, v)
    if not edges:
        raise GraphFormatError("empty graph: no edges in input")
    return make_graph(max_id + 1, edges)


def serialize_edge_list(graph: WeightedGraph) -> str:
    lines = [f"{u} {v} {w!r}" for u, v, w in graph.edges]
    return "\n".join(lines) + "\n"


def from_symmetric_matrix(
    entries: Iterable[tuple[int, int, float]], n: int | None = None
) -> WeightedGraph:
    """Graph of a symmetric matrix: w_(i,j) = A_ij, nonzero diagonals as self-loops.

    Either triangle (or both) may be given; (i,j) and (j,i) must agree within
    SYMMETRY_TOL. Explicit zeros are dropped (no edge).
    """
    vals: dict[tuple[int, int], float] = {}
    max_id = -1
    for i, j, v in entries:
        if i < 0 or j < 0:
            raise GraphFormatError(f"negative index in matrix entry ({i}, {j})")
        key = (min(i, j), max(i, j))
        v = float(v)
        if key in vals and abs(vals[key] - v) > SYMMETRY_TOL:
            raise AsymmetryError(
                f"entries ({key[0]},{key[1]}) and ({key[1]},{key[0]}) disagree: "
                f"{vals[key]} vs {v}"
            )
        vals[key] = v
        max_id = max(max_id, i, j)
    if max_id < 0:
        raise GraphFormatError("empty matrix: no entries")
    size = max_id + 1 if n is None else n
    if size <= max_id:
        raise GraphFormatError(f"declared size {size} smaller than max index {max_id}")
    return make_graph(size, [(i, j, v) for (i, j), v in vals.items() if v != 0.0])


def load_matrix_text(text: str) -> WeightedGraph:
    """Parse the "n nnz" header plus "i j value" triples (0-based)."""
    rows = [
        ln.split("#", 1)[0].strip()
        for ln in text.splitlines()
    ]
    rows = [r for r in rows if r]
    if not rows:
        raise GraphFormatError("empty matrix file")
    header = rows[0].split()
    if len(header) != 2:
        raise GraphFormatError(f"matrix header must be 'n nnz', got {rows[0]!r}")
    try:
        n, nnz = int(header[0]), int(header[1])
    except ValueError as exc:
        raise GraphFormatError(f"matrix header must be 'n nnz': {exc}") from exc
    if len(rows) - 1 != nnz:
        raise GraphFormatError(f"matrix header declares {nnz} entries, found {len(rows) - 1}")
    entries = []
    for lineno, row in enumerate(rows[1:], start=2):
        parts = row.split()
        if len(parts) != 3:
            raise GraphFormatError(f"line {lineno}: expected 'i j value'")
        entries.append((int(parts[0]), int(parts[1]), float(parts[2])))
    return from_symmetric_matrix(entries, n=n)


def serialize_matrix(graph: WeightedGraph) -> str:
    lines = [f"{graph.n} {len(graph.edges)}"]
    lines += [f"{u} {v} {w!r}" for u, v, w in graph.edges]
    return "\n".join(lines) + "\n"


def matrix_entries(graph: WeightedGraph) -> tuple[tuple[int, int, float], ...]:
    """Nonzero entries of the lower-triangle-canonical matrix view."""
    return graph.edges


@dataclass(frozen=True)
class GraphReport:
    connected: bool
    has_self_loops: bool
    n: int
    edge_count: int

    def to_dict(self) -> dict:
        return {
            "connected": self.connected,
            "has_self_loops": self.has_self_loops,
            "n": self.n,
            "edges": self.edge_count,
        }


def validate(graph: WeightedGraph) -> GraphReport:
    return GraphReport(
        connected=graph.connected,
        has_self_loops=bool(graph.self_loops),
        n=graph.n,
        edge_count=len(graph.edges),
    )


def absorb_self_loops(
    graph: WeightedGraph, assignment: Mapping[int, int]
) -> WeightedGraph:
    """Fold every self-loop weight into an incident edge, removing the loop.

    Self-looped nodes are processed in ascending order; at each step the
    loop (k,k) is deleted and the weight of the assigned edge (assignment[k], k)
    is multiplied by the loop weight. The choice of incident neighbor is the
    caller's. This construction demonstrably changes the spectrum whenever a
    single-self-loop excursion mattered; see the spectra tests.
    """
    weights = dict(graph._weights)
    for k in sorted(graph.self_loops):
        if k not in assignment:
            raise GraphFormatError(f"node {k} has a self-loop but no assignment")
        j = assignment[k]
        if j == k:
            raise GraphFormatError(f"assignment for node {k} must be a distinct neighbor")
        key = (min(j, k), max(j, k))
        if key not in weights:
            raise GraphFormatError(
                f"cannot absorb self-loop at {k}: no edge to assigned neighbor {j}"
            )
        loop_w = weights.pop((k, k))
        weights[key] = weights[key] * loop_w
    return make_graph(graph.n, [(u, v, w) for (u, v), w in weights.items()])
