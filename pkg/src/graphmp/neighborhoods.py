"""Neighborhood construction, equivalence classes, and overcounting schedules.

Three neighborhood families parameterized by an integer r >= 0:

- primary N_i^(r): node i, its neighbors, the edges to them, plus every
  node/edge on a simple path of length <= r that joins two distinct
  neighbors of i without passing through i (r = 0 gives the star on i);
- intersection N_{i&j} = N_i^(r) & N_j^(r) (node-and-edge set intersection),
  the message-carrying unit of this engine;
- difference N_{i\\j}: node i plus the edges of N_i^(r) not in N_j^(r) and
  their endpoints (carried only for size comparisons against the
  difference-neighborhood method).

classify() deduplicates the intersections into classes, checks the
equivalence-class condition (all member pairs of a class reproduce the
class), finds pivots (nodes generating >= 2 distinct classes), and declares
the loop bound fulfilled when the condition holds everywhere and the
class/pivot incidence graph is a forest. Self-loops contribute trivial
classes {k, (k,k)}.

build_schedules() produces the order-dependent accumulated edge sets used
by the unbounded (approximate) message scheme: for a target pair (i,j) the
P-schedule starts from the edges of N_{i&j} and records the accumulated set
right before each source pair (k, q) is visited; the per-node Q-schedule
starts empty and records the set before each neighbor j of i is visited.
Visit order is canonical (ascending) unless a seed permutes it.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from .graphs import WeightedGraph

Edge = tuple[int, int]


def _ekey(u: int, v: int) -> Edge:
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True)
class Neighborhood:
    """A node set plus an edge set; every edge endpoint is in the node set."""

    nodes: frozenset[int]
    edges: frozenset[Edge]

    def node_count(self) -> int:
        return len(self.nodes)

    def edge_count(self) -> int:
        return len(self.edges)

    def key(self) -> tuple:
        return (tuple(sorted(self.nodes)), tuple(sorted(self.edges)))


def build_primary(graph: WeightedGraph, r: int, i: int) -> Neighborhood:
    """Primary neighborhood N_i^(r).

    Connecting paths are enumerated by depth-first search over simple paths
    of length <= r starting at each neighbor of i and avoiding i; whenever a
    path lands on a different neighbor, its nodes and edges are included.
    Self-loops never enter primary neighborhoods (they live in trivial
    classes only).
    """
    nn = set(graph.neighbors(i))
    nodes = {i} | nn
    edges = {_ekey(i, a) for a in nn}
    if r > 0 and len(nn) > 1:
        for a in sorted(nn):
            # stack of (node, path_nodes, path_edges)
            stack = [(a, (a,), ())]
            while stack:
                u, pnodes, pedges = stack.pop()
                if len(pedges) == r:
                    continue
                for w in graph.neighbors(u):
                    if w == i or w in pnodes:
                        continue
                    npnodes = pnodes + (w,)
                    npedges = pedges + (_ekey(u, w),)
                    if w in nn and w != a:
                        nodes.update(npnodes)
                        edges.update(npedges)
                    stack.append((w, npnodes, npedges))
    return Neighborhood(frozenset(nodes), frozenset(edges))


def build_intersection(graph: WeightedGraph, r: int, i: int, j: int) -> Neighborhood:
    """N_{i&j}: plain set intersection of the two primaries.

    Total in (i, j): callers outside the valid pair domain (j in N_i \\ {i})
    still get the raw intersection; classify() enumerates valid pairs only.
    """
    a = build_primary(graph, r, i)
    b = build_primary(graph, r, j)
    return _intersect(a, b)


def _intersect(a: Neighborhood, b: Neighborhood) -> Neighborhood:
    return Neighborhood(a.nodes & b.nodes, a.edges & b.edges)


def build_difference(graph: WeightedGraph, r: int, i: int, j: int) -> Neighborhood:
    """N_{i\\j}: node i plus edges of N_i^(r) not in N_j^(r), with endpoints."""
    a = build_primary(graph, r, i)
    b = build_primary(graph, r, j)
    edges = a.edges - b.edges
    nodes = {i}
    for u, v in edges:
        nodes.add(u)
        nodes.add(v)
    return Neighborhood(frozenset(nodes), frozenset(edges))


@dataclass(frozen=True)
class NeighborhoodSystem:
    """Classes, membership, pivots, hypernetwork, and the loop-bound verdict.

    `classes[cid]` lists distinct intersection neighborhoods first, then one
    trivial class {k, (k,k)} per self-loop (ids in `trivial_classes`, flags
    in `is_trivial`). `membership[s]` holds the class ids that node s
    generates through its own valid pairs (plus its trivial class); on
    fulfilled graphs this coincides with plain containment.
    """

    r: int
    n: int
    classes: tuple[Neighborhood, ...]
    is_trivial: tuple[bool, ...]
    trivial_classes: dict[int, int] = field(repr=False)
    pair_class: dict[tuple[int, int], int] = field(repr=False)
    membership: tuple[tuple[int, ...], ...] = field(repr=False)
    primaries: tuple[Neighborhood, ...] = field(repr=False)
    pivots: frozenset[int]
    hyperedges: dict[int, frozenset[int]] = field(repr=False)
    condition_ok: bool
    condition_witnesses: tuple[str, ...]
    acyclic: bool
    loop_bound_fulfilled: bool

    def class_members(self, cid: int) -> tuple[int, ...]:
        return tuple(sorted(self.classes[cid].nodes))

    def classes_of(self, s: int, exclude: int | None = None) -> tuple[int, ...]:
        cids = self.membership[s]
        if exclude is None:
            return cids
        return tuple(c for c in cids if c != exclude)

    def nontrivial_classes_of(self, s: int) -> tuple[int, ...]:
        return tuple(c for c in self.membership[s] if not self.is_trivial[c])

    def valid_pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.pair_class.keys()))

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "n": self.n,
            "classes": [
                {
                    "id": cid,
                    "nodes": sorted(c.nodes),
                    "edges": sorted(c.edges),
                    "trivial": self.is_trivial[cid],
                }
                for cid, c in enumerate(self.classes)
            ],
            "pivots": sorted(self.pivots),
            "hyperedges": {str(s): sorted(cids) for s, cids in sorted(self.hyperedges.items())},
            "condition_ok": self.condition_ok,
            "condition_witnesses": list(self.condition_witnesses),
            "acyclic": self.acyclic,
            "loop_bound_fulfilled": self.loop_bound_fulfilled,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def classify(graph: WeightedGraph, r: int) -> NeighborhoodSystem:
    """Build the full neighborhood system and the loop-bound verdict.

    The verdict is operational: (equivalence-class condition holds for every
    class) and (the class/pivot incidence graph is acyclic). Witnesses of
    condition failure are recorded, not raised; the verdict is data.
    """
    primaries = tuple(build_primary(graph, r, i) for i in range(graph.n))
    classes: list[Neighborhood] = []
    class_ids: dict[tuple, int] = {}
    pair_class: dict[tuple[int, int], int] = {}
    membership: list[set[int]] = [set() for _ in range(graph.n)]

    for i in range(graph.n):
        for j in sorted(primaries[i].nodes - {i}):
            inter = _intersect(primaries[i], primaries[j])
            key = inter.key()
            cid = class_ids.get(key)
            if cid is None:
                cid = len(classes)
                classes.append(inter)
                class_ids[key] = cid
            pair_class[(i, j)] = cid
            membership[i].add(cid)

    witnesses: list[str] = []
    for cid, cls in enumerate(classes):
        members = sorted(cls.nodes)
        for a in members:
            for b in members:
                if a == b:
                    continue
                if b in primaries[a].nodes:
                    other = _intersect(primaries[a], primaries[b])
                elif a in primaries[b].nodes:
                    other = _intersect(primaries[b], primaries[a])
                else:
                    witnesses.append(
                        f"class {cid}: members {a},{b} form no valid pair"
                    )
                    continue
                if other.key() != cls.key():
                    witnesses.append(
                        f"class {cid}: N_{{{a}&{b}}} differs from the class"
                    )
    condition_ok = not witnesses

    is_trivial = [False] * len(classes)
    trivial: dict[int, int] = {}
    for k in sorted(graph.self_loops):
        cid = len(classes)
        classes.append(Neighborhood(frozenset({k}), frozenset({(k, k)})))
        is_trivial.append(True)
        trivial[k] = cid
        membership[k].add(cid)

    pivots = frozenset(s for s in range(graph.n) if len(membership[s]) >= 2)
    hyperedges = {s: frozenset(membership[s]) for s in sorted(pivots)}
    acyclic = _incidence_is_forest(len(classes), pivots, hyperedges)

    return NeighborhoodSystem(
        r=r,
        n=graph.n,
        classes=tuple(classes),
        is_trivial=tuple(is_trivial),
        trivial_classes=trivial,
        pair_class=pair_class,
        membership=tuple(tuple(sorted(m)) for m in membership),
        primaries=primaries,
        pivots=pivots,
        hyperedges=hyperedges,
        condition_ok=condition_ok,
        condition_witnesses=tuple(witnesses),
        acyclic=acyclic,
        loop_bound_fulfilled=condition_ok and acyclic,
    )


def _incidence_is_forest(
    n_classes: int, pivots: frozenset[int], hyperedges: dict[int, frozenset[int]]
) -> bool:
    """Union-find forest check on the bipartite classes <-> pivots graph."""
    parent = list(range(n_classes + len(pivots)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    pivot_index = {s: n_classes + k for k, s in enumerate(sorted(pivots))}
    for s, cids in hyperedges.items():
        ps = pivot_index[s]
        for c in cids:
            ra, rb = find(ps), find(c)
            if ra == rb:
                return False
            parent[ra] = rb
    return True


def is_hypernetwork_acyclic(system: NeighborhoodSystem) -> bool:
    """True iff the class/pivot incidence graph is a forest."""
    return _incidence_is_forest(len(system.classes), system.pivots, system.hyperedges)


@dataclass(frozen=True)
class SizeReportRow:
    i: int
    j: int
    primary_nodes: int
    primary_edges: int
    inter_nodes: int
    inter_edges: int
    diff_nodes: int
    diff_edges: int

    def to_dict(self) -> dict:
        return {
            "i": self.i,
            "j": self.j,
            "primary": [self.primary_nodes, self.primary_edges],
            "intersection": [self.inter_nodes, self.inter_edges],
            "difference_j_minus_i": [self.diff_nodes, self.diff_edges],
        }


@dataclass(frozen=True)
class SizeReport:
    rows: tuple[SizeReportRow, ...]
    max_primary_nodes: int
    max_inter_nodes: int
    max_diff_nodes: int

    def to_dict(self) -> dict:
        return {
            "max_primary_nodes": self.max_primary_nodes,
            "max_intersection_nodes": self.max_inter_nodes,
            "max_difference_nodes": self.max_diff_nodes,
            "rows": [r.to_dict() for r in self.rows],
        }


def neighborhood_size_report(graph: WeightedGraph, r: int) -> SizeReport:
    """Node/edge counts of |N_i|, |N_{i&j}| and |N_{j\\i}| over all valid pairs.

    The difference column reports N_{j\\i} (the unit the difference-
    neighborhood method inverts for the message j -> i).
    """
    primaries = [build_primary(graph, r, i) for i in range(graph.n)]
    rows = []
    for i in range(graph.n):
        for j in sorted(primaries[i].nodes - {i}):
            inter = _intersect(primaries[i], primaries[j])
            dedges = primaries[j].edges - primaries[i].edges
            dnodes = {j}
            for u, v in dedges:
                dnodes.update((u, v))
            rows.append(
                SizeReportRow(
                    i=i,
                    j=j,
                    primary_nodes=primaries[i].node_count(),
                    primary_edges=primaries[i].edge_count(),
                    inter_nodes=inter.node_count(),
                    inter_edges=inter.edge_count(),
                    diff_nodes=len(dnodes),
                    diff_edges=len(dedges),
                )
            )
    return SizeReport(
        rows=tuple(rows),
        max_primary_nodes=max((r_.primary_nodes for r_ in rows), default=0),
        max_inter_nodes=max((r_.inter_nodes for r_ in rows), default=0),
        max_diff_nodes=max((r_.diff_nodes for r_ in rows), default=0),
    )


@dataclass(frozen=True)
class UnboundedSchedule:
    """Accumulated edge sets preventing overcounting in the unbounded scheme.

    `pbar[(pair, (k, q))]` is the edge set already incorporated for target
    `pair` right before source (k, q) is visited (initialized to the target
    class's own edges); `qbar[(i, j)]` is the set already incorporated for
    node i's inference right before neighbor j is visited (initialized
    empty). Accumulated sets are nondecreasing along the recorded orders.
    """

    targets: tuple[tuple[int, int], ...]
    pbar: dict[tuple[tuple[int, int], tuple[int, int]], frozenset[Edge]] = field(repr=False)
    pbar_order: dict[tuple[int, int], tuple[tuple[int, int], ...]] = field(repr=False)
    qbar: dict[tuple[int, int], frozenset[Edge]] = field(repr=False)
    qbar_order: dict[int, tuple[int, ...]] = field(repr=False)

    def message_edges(
        self, system: NeighborhoodSystem, target: tuple[int, int], source: tuple[int, int],
        literal: bool = False,
    ) -> frozenset[Edge]:
        """Edges the message (k,q) -> target averages over.

        Default: the source class's edges not yet incorporated. literal=True
        flips to the already-incorporated edges of the source class.
        """
        k, q = source
        cls = self.source_class(system, k, q)
        seen = self.pbar[(target, source)]
        return cls.edges - seen if not literal else cls.edges & seen

    def inference_edges(
        self, system: NeighborhoodSystem, i: int, j: int
    ) -> frozenset[Edge]:
        cls = self.source_class(system, i, j)
        return cls.edges - self.qbar[(i, j)]

    @staticmethod
    def source_class(system: NeighborhoodSystem, k: int, q: int) -> Neighborhood:
        cid = system.pair_class.get((k, q))
        if cid is None:
            cid = system.pair_class.get((q, k))
        if cid is not None:
            return system.classes[cid]
        return _intersect(system.primaries[k], system.primaries[q])


def build_schedules(
    graph: WeightedGraph, r: int, system: NeighborhoodSystem | None = None,
    order_seed: int | None = None,
) -> UnboundedSchedule:
    """Replay the accumulation recursions in canonical (or seeded) order.

    For each unordered target pair {i,j}: start from the edges of N_{i&j},
    then visit source pairs (k in N_{i&j} nodes, q in N_k \\ {k}) recording
    the accumulated set immediately before each visit and incorporating the
    edges of N_{k&q} after it. The per-node schedule visits j in N_i \\ {i}
    starting from the empty set. A seed shuffles both visit orders for
    order-sensitivity studies; default is ascending.
    """
    if system is None:
        system = classify(graph, r)
    rng = random.Random(order_seed) if order_seed is not None else None

    def maybe_shuffled(items: list) -> list:
        if rng is not None:
            items = list(items)
            rng.shuffle(items)
        return items

    targets = sorted(
        {(min(i, j), max(i, j)) for (i, j) in system.pair_class.keys()}
    )
    pbar: dict = {}
    pbar_order: dict = {}
    for a, b in targets:
        tclass = UnboundedSchedule.source_class(system, a, b)
        acc: set[Edge] = set(tclass.edges)
        order = []
        visits = [
            (k, q)
            for k in sorted(tclass.nodes)
            for q in sorted(system.primaries[k].nodes - {k})
        ]
        for k, q in maybe_shuffled(visits):
            pbar[((a, b), (k, q))] = frozenset(acc)
            order.append((k, q))
            acc |= UnboundedSchedule.source_class(system, k, q).edges
        pbar_order[(a, b)] = tuple(order)

    qbar: dict = {}
    qbar_order: dict = {}
    for i in range(graph.n):
        acc = set()
        order_i = []
        for j in maybe_shuffled(sorted(system.primaries[i].nodes - {i})):
            qbar[(i, j)] = frozenset(acc)
            order_i.append(j)
            acc |= UnboundedSchedule.source_class(system, i, j).edges
        qbar_order[i] = tuple(order_i)

    return UnboundedSchedule(
        targets=tuple(targets),
        pbar=pbar,
        pbar_order=pbar_order,
        qbar=qbar,
        qbar_order=qbar_order,
    )
