"""Bond-percolation cluster statistics via intersection-neighborhood messages.

Messages are cluster-size generating values H_{c->k}(z): the distribution of
the cluster containing k (k included) when k keeps only class c among its
own classes. One sweep recomputes every message synchronously:

    H_{c->k}(z) = z * G_{c->k}(y),   y_s = z * prod_{q in classes(s), q != c} H_{q->s}(z) / z

where G_{c->k} averages prod_s y_s^{w_ks} over the 2^m occupation
configurations of c's edges (w_ks = 1 iff an occupied path inside c joins k
to s), weighted p^k (1-p)^(m-k). Exact enumeration is used up to
enum_threshold edges, Monte-Carlo pattern sampling beyond (frozen per
(class, root) so the fixed-point map stays deterministic).

Inference: H_i(z) = z * prod_{c in classes(i)} G_{c->i}(y). Observables:
H_i(1) (small-cluster probability), S = 1 - mean_i H_i(1), pi_i(s) (series
coefficients), and <s_i> = H_i'(1) computed by iterating the exact
linearization of the update map at z = 1.

The unbounded scheme replaces (class, member) messages with (source pair ->
target pair) messages whose occupation averages run over the source class
edges not yet incorporated under the target's accumulation schedule; a
message with an empty edge set is identically z (vacuous) and drops out of
all products and derivative sums on its own.

Self-loops never matter here: trivial classes contribute a factor 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DisconnectedGraphError, GraphFormatError, LoopBoundError
from .graphs import WeightedGraph
from .neighborhoods import (
    Neighborhood,
    NeighborhoodSystem,
    UnboundedSchedule,
    build_schedules,
    classify,
)
from .rng import stable_text_key, trial_keys, uniforms
from .series import ScalarAlgebra, SeriesAlgebra


@dataclass
class PercConfig:
    """Run configuration; defaults mirror the engine contracts.

    mode "auto" picks bounded iff the loop-bound verdict is fulfilled.
    s_max switches the pi pass on (series mode); h1 and <s_i> always come
    from a scalar pass at z = 1. In scalar mode at z = 1 the default init
    (value z) is the all-finite-cluster fixed point, which is the answer on
    finite graphs; use init="random" with a seed to reach the percolating
    solution on supercritical graphs.
    """

    p: float = 0.5
    r: int = 1
    mode: str = "auto"             # auto | bounded | unbounded
    z: float = 1.0
    s_max: int | None = None
    tol: float = 1e-10
    max_iter: int = 10000
    damping: float = 0.0
    enum_threshold: int = 16
    mc_samples: int = 100_000
    seed: int = 0
    init: str = "unit"             # unit (= value z) | random
    literal_pbar: bool = False
    allow_approx: bool = False

    def check(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise GraphFormatError(f"p must be in [0,1], got {self.p}")
        if self.mode not in ("auto", "bounded", "unbounded"):
            raise GraphFormatError(f"unknown mode {self.mode!r}")
        if self.z <= 0:
            raise GraphFormatError("z must be > 0")
        if not 0.0 <= self.damping < 1.0:
            raise GraphFormatError("damping must be in [0, 1)")
        if self.s_max is not None and self.s_max < 1:
            raise GraphFormatError("s_max must be >= 1")

    def to_dict(self) -> dict:
        return {
            "p": self.p, "r": self.r, "mode": self.mode, "z": self.z,
            "s_max": self.s_max, "tol": self.tol, "max_iter": self.max_iter,
            "damping": self.damping, "enum_threshold": self.enum_threshold,
            "mc_samples": self.mc_samples, "seed": self.seed, "init": self.init,
            "literal_pbar": self.literal_pbar, "allow_approx": self.allow_approx,
        }


@dataclass(frozen=True)
class ReachTable:
    """Collapsed occupation average for one (edge set, root).

    patterns are bitmasks over `members`: which members are joined to the
    root by occupied edges. weights sum to 1 (exact) or estimate it (MC).
    """

    members: tuple[int, ...]
    patterns: tuple[int, ...]
    weights: tuple[float, ...]
    exact: bool


def build_reach_table(
    edges, root: int, p: float, enum_threshold: int = 16,
    mc_samples: int = 100_000, seed_key: int = 0,
) -> ReachTable:
    edges = sorted(edges)
    touched = sorted({v for e in edges for v in e})
    members = tuple(v for v in touched if v != root)
    if not edges or root not in touched or not members:
        return ReachTable(members=members, patterns=(0,), weights=(1.0,), exact=True)
    index = {v: k for k, v in enumerate(touched)}
    bit = {v: 1 << k for k, v in enumerate(members)}
    m = len(edges)
    acc: dict[int, float] = {}
    if m <= enum_threshold:
        pk = [p**k * (1.0 - p) ** (m - k) for k in range(m + 1)]
        for mask in range(1 << m):
            w = pk[mask.bit_count()]
            if w == 0.0:
                continue
            pat = _reach_pattern(edges, mask, index, root, members, bit)
            acc[pat] = acc.get(pat, 0.0) + w
        exact = True
    else:
        keys = trial_keys(seed_key, 0, mc_samples)
        occ = np.empty((mc_samples, m), dtype=bool)
        for e in range(m):
            occ[:, e] = uniforms(keys, e) < p
        w = 1.0 / mc_samples
        for row in range(mc_samples):
            pat = _reach_pattern(edges, None, index, root, members, bit, occ_row=occ[row])
            acc[pat] = acc.get(pat, 0.0) + w
        exact = False
    pats = tuple(sorted(acc))
    return ReachTable(
        members=members,
        patterns=pats,
        weights=tuple(acc[pt] for pt in pats),
        exact=exact,
    )


def _reach_pattern(edges, mask, index, root, members, bit, occ_row=None) -> int:
    parent = list(range(len(index)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e, (u, v) in enumerate(edges):
        on = (mask >> e & 1) if occ_row is None else occ_row[e]
        if on:
            ru, rv = find(index[u]), find(index[v])
            if ru != rv:
                parent[ru] = rv
    r = find(index[root])
    pat = 0
    for v in members:
        if find(index[v]) == r:
            pat |= bit[v]
    return pat


def eval_reach(table: ReachTable, y: dict, algebra, want_partials: bool = False):
    """G(y) = sum_pat w * prod_{s in pat} y_s, and optionally dG/dy_s."""
    members = table.members
    cache = {0: algebra.one()}

    def prod(mask: int):
        v = cache.get(mask)
        if v is None:
            low = mask & -mask
            v = algebra.mul(prod(mask ^ low), y[members[low.bit_length() - 1]])
            cache[mask] = v
        return v

    value = algebra.scale(algebra.one(), 0.0)
    for pat, w in zip(table.patterns, table.weights):
        value = algebra.add(value, algebra.scale(prod(pat), w))
    if not want_partials:
        return value, None
    partials = {s: algebra.scale(algebra.one(), 0.0) for s in members}
    for pat, w in zip(table.patterns, table.weights):
        rest = pat
        while rest:
            low = rest & -rest
            rest ^= low
            s = members[low.bit_length() - 1]
            partials[s] = algebra.add(partials[s], algebra.scale(prod(pat ^ low), w))
    return value, partials


def eval_G(cls: Neighborhood, root: int, y: dict, p: float, config: PercConfig, algebra=None):
    """Spec surface: average prod y_s^{w_root,s} over class occupations.

    Returns (value, partials). y must cover every table member (class nodes
    reachable through class edges, root excluded).
    """
    algebra = algebra or ScalarAlgebra(config.z)
    table = build_reach_table(
        cls.edges, root, p, config.enum_threshold, config.mc_samples,
        seed_key=stable_text_key(f"{config.seed}:{root}:{sorted(cls.edges)}"),
    )
    value, partials = eval_reach(table, y, algebra, want_partials=True)
    return value, partials


def _iterate(state: dict, sweep, algebra, tol: float, max_iter: int, damping: float):
    """Synchronous two-buffer fixed-point loop; returns (state, iters, delta).

    Besides max_iter, a stall detector aborts early when the max delta has
    shrunk by less than 2% over the last 50 sweeps (contraction factor
    effectively >= 0.9996, i.e. a stalled or diverging linear map).
    """
    delta = float("inf")
    history: list[float] = []
    for it in range(1, max_iter + 1):
        new = sweep(state)
        delta = 0.0
        for k, v in new.items():
            if not algebra.is_finite(v):
                raise ConvergenceError("non-finite message value", partial=state)
            d = algebra.max_diff(v, state[k])
            if d > delta:
                delta = d
        if damping > 0.0:
            new = {k: algebra.blend(state[k], v, damping) for k, v in new.items()}
        state = new
        if delta < tol:
            return state, it, delta
        history.append(delta)
        if len(history) > 50 and delta >= history[-51] * 0.98:
            raise ConvergenceError(
                f"iteration stalled after {it} sweeps (delta {delta:.3g}, "
                f"50 sweeps ago {history[-51]:.3g})",
                partial=state,
            )
    raise ConvergenceError(
        f"percolation messages did not converge after {max_iter} sweeps "
        f"(last delta {delta:.3g})",
        partial=state,
    )


class BoundedPercolation:
    """Messages keyed (class id, member node); exact when the verdict holds."""

    def __init__(self, graph: WeightedGraph, system: NeighborhoodSystem, config: PercConfig):
        self.graph = graph
        self.system = system
        self.config = config
        self._tables: dict[tuple[int, int], ReachTable] = {}
        self.keys = [
            (cid, k)
            for k in range(graph.n)
            for cid in system.nontrivial_classes_of(k)
        ]

    def table(self, cid: int, root: int) -> ReachTable:
        tab = self._tables.get((cid, root))
        if tab is None:
            cls = self.system.classes[cid]
            tab = build_reach_table(
                cls.edges, root, self.config.p, self.config.enum_threshold,
                self.config.mc_samples,
                seed_key=stable_text_key(f"{self.config.seed}:{cid}:{root}"),
            )
            self._tables[(cid, root)] = tab
        return tab

    def initial(self, algebra) -> dict:
        if algebra.mode == "scalar" and self.config.init == "random":
            rng = np.random.default_rng(self.config.seed)
            return {k: float(rng.uniform(0.0, 1.0)) for k in self.keys}
        return {k: algebra.z_value() for k in self.keys}

    def phi(self, state: dict, s: int, exclude_cid: int, algebra):
        return algebra.combine(
            state[(q, s)]
            for q in self.system.nontrivial_classes_of(s)
            if q != exclude_cid
        )

    def sweep(self, state: dict, algebra) -> dict:
        new = {}
        for cid, k in self.keys:
            tab = self.table(cid, k)
            y = {s: self.phi(state, s, cid, algebra) for s in tab.members}
            g, _ = eval_reach(tab, y, algebra)
            new[(cid, k)] = algebra.times_z(g)
        return new

    def converge(self, algebra):
        return _iterate(
            self.initial(algebra), lambda st: self.sweep(st, algebra), algebra,
            self.config.tol, self.config.max_iter, self.config.damping,
        )

    def infer_terms(self, state: dict, i: int, algebra, want_partials: bool = False):
        """Per-class (cid, G value, partials, table) at the inference root i."""
        terms = []
        for cid in self.system.nontrivial_classes_of(i):
            tab = self.table(cid, i)
            y = {s: self.phi(state, s, cid, algebra) for s in tab.members}
            g, partials = eval_reach(tab, y, algebra, want_partials)
            terms.append((cid, g, partials, tab))
        return terms

    def infer_node(self, state: dict, i: int, algebra):
        out = algebra.one()
        for _, g, _, _ in self.infer_terms(state, i, algebra):
            out = algebra.mul(out, g)
        return algebra.times_z(out)

    # -- expected cluster sizes: exact linearization of the update at z = 1 --

    def _dphi(self, state1, dstate, s: int, exclude_cid: int) -> float:
        qs = [q for q in self.system.nontrivial_classes_of(s) if q != exclude_cid]
        h = [state1[(q, s)] for q in qs]
        dh = [dstate[(q, s)] for q in qs]
        total = 1.0
        for v in h:
            total *= v
        out = total
        for a in range(len(qs)):
            rest = 1.0
            for b in range(len(qs)):
                if b != a:
                    rest *= h[b]
            out += (dh[a] - h[a]) * rest
        return out

    def expected_sizes(self, state1: dict) -> np.ndarray:
        alg = ScalarAlgebra(1.0)
        msg_partials = {}
        for cid, k in self.keys:
            tab = self.table(cid, k)
            y = {s: self.phi(state1, s, cid, alg) for s in tab.members}
            _, partials = eval_reach(tab, y, alg, want_partials=True)
            msg_partials[(cid, k)] = (tab, partials)

        def dsweep(dstate: dict) -> dict:
            new = {}
            for cid, k in self.keys:
                tab, partials = msg_partials[(cid, k)]
                acc = state1[(cid, k)]
                for s in tab.members:
                    acc += partials[s] * self._dphi(state1, dstate, s, cid)
                new[(cid, k)] = acc
            return new

        dstate = dict(state1)
        dstate, _, _ = _iterate(
            dstate, dsweep, alg, self.config.tol, self.config.max_iter, self.config.damping,
        )

        out = np.zeros(self.graph.n)
        for i in range(self.graph.n):
            terms = self.infer_terms(state1, i, alg, want_partials=True)
            gs = [g for _, g, _, _ in terms]
            h1 = 1.0
            for g in gs:
                h1 *= g
            total = h1
            for a, (cid, _, partials, tab) in enumerate(terms):
                rest = 1.0
                for b in range(len(gs)):
                    if b != a:
                        rest *= gs[b]
                for s in tab.members:
                    total += rest * partials[s] * self._dphi(state1, dstate, s, cid)
            out[i] = total
        return out


class UnboundedPercolation:
    """Messages keyed (root k, other q, target pair); schedule-filtered averages."""

    def __init__(
        self, graph: WeightedGraph, system: NeighborhoodSystem,
        schedule: UnboundedSchedule, config: PercConfig,
    ):
        self.graph = graph
        self.system = system
        self.schedule = schedule
        self.config = config
        self._tables: dict = {}
        self.keys = []
        self.msg_edges = {}
        for tgt in schedule.targets:
            cls = UnboundedSchedule.source_class(system, *tgt)
            for k in sorted(cls.nodes):
                for q in sorted(system.primaries[k].nodes - {k}):
                    key = (k, q, tgt)
                    self.keys.append(key)
                    self.msg_edges[key] = schedule.message_edges(
                        system, tgt, (k, q), literal=config.literal_pbar
                    )

    def table(self, key) -> ReachTable:
        k, _, _ = key
        edges = self.msg_edges[key]
        cache_key = (k, edges)
        tab = self._tables.get(cache_key)
        if tab is None:
            tab = build_reach_table(
                edges, k, self.config.p, self.config.enum_threshold,
                self.config.mc_samples,
                seed_key=stable_text_key(f"{self.config.seed}:{k}:{sorted(edges)}"),
            )
            self._tables[cache_key] = tab
        return tab

    def initial(self, algebra) -> dict:
        if algebra.mode == "scalar" and self.config.init == "random":
            rng = np.random.default_rng(self.config.seed)
            return {k: float(rng.uniform(0.0, 1.0)) for k in self.keys}
        return {k: algebra.z_value() for k in self.keys}

    def phi(self, state: dict, p_node: int, into_pair: tuple[int, int], algebra):
        return algebra.combine(
            state[(p_node, s, into_pair)]
            for s in sorted(self.system.primaries[p_node].nodes - {p_node})
        )

    def sweep(self, state: dict, algebra) -> dict:
        new = {}
        for key in self.keys:
            k, q, tgt = key
            tab = self.table(key)
            src = (min(k, q), max(k, q))
            y = {s: self.phi(state, s, src, algebra) for s in tab.members}
            g, _ = eval_reach(tab, y, algebra)
            new[key] = algebra.times_z(g)
        return new

    def converge(self, algebra):
        return _iterate(
            self.initial(algebra), lambda st: self.sweep(st, algebra), algebra,
            self.config.tol, self.config.max_iter, self.config.damping,
        )

    def infer_terms(self, state: dict, i: int, algebra, want_partials: bool = False):
        terms = []
        for j in sorted(self.system.primaries[i].nodes - {i}):
            edges = self.schedule.inference_edges(self.system, i, j)
            tab = self._tables.get((i, edges))
            if tab is None:
                tab = build_reach_table(
                    edges, i, self.config.p, self.config.enum_threshold,
                    self.config.mc_samples,
                    seed_key=stable_text_key(f"{self.config.seed}:{i}:{sorted(edges)}"),
                )
                self._tables[(i, edges)] = tab
            pair = (min(i, j), max(i, j))
            y = {s: self.phi(state, s, pair, algebra) for s in tab.members}
            g, partials = eval_reach(tab, y, algebra, want_partials)
            terms.append((pair, g, partials, tab))
        return terms

    def infer_node(self, state: dict, i: int, algebra):
        out = algebra.one()
        for _, g, _, _ in self.infer_terms(state, i, algebra):
            out = algebra.mul(out, g)
        return algebra.times_z(out)

    def _dphi(self, state1, dstate, p_node: int, into_pair) -> float:
        keys = [
            (p_node, s, into_pair)
            for s in sorted(self.system.primaries[p_node].nodes - {p_node})
        ]
        h = [state1[k] for k in keys]
        dh = [dstate[k] for k in keys]
        total = 1.0
        for v in h:
            total *= v
        out = total
        for a in range(len(keys)):
            rest = 1.0
            for b in range(len(keys)):
                if b != a:
                    rest *= h[b]
            out += (dh[a] - h[a]) * rest
        return out

    def expected_sizes(self, state1: dict) -> np.ndarray:
        alg = ScalarAlgebra(1.0)
        msg_partials = {}
        for key in self.keys:
            k, q, tgt = key
            tab = self.table(key)
            src = (min(k, q), max(k, q))
            y = {s: self.phi(state1, s, src, alg) for s in tab.members}
            _, partials = eval_reach(tab, y, alg, want_partials=True)
            msg_partials[key] = (tab, partials, src)

        def dsweep(dstate: dict) -> dict:
            new = {}
            for key in self.keys:
                tab, partials, src = msg_partials[key]
                acc = state1[key]
                for s in tab.members:
                    acc += partials[s] * self._dphi(state1, dstate, s, src)
                new[key] = acc
            return new

        dstate = dict(state1)
        dstate, _, _ = _iterate(
            dstate, dsweep, alg, self.config.tol, self.config.max_iter, self.config.damping,
        )

        out = np.zeros(self.graph.n)
        for i in range(self.graph.n):
            terms = self.infer_terms(state1, i, alg, want_partials=True)
            gs = [g for _, g, _, _ in terms]
            h1 = 1.0
            for g in gs:
                h1 *= g
            total = h1
            for a, (pair, _, partials, tab) in enumerate(terms):
                rest = 1.0
                for b in range(len(gs)):
                    if b != a:
                        rest *= gs[b]
                for s in tab.members:
                    total += rest * partials[s] * self._dphi(state1, dstate, s, pair)
            out[i] = total
        return out


def small_cluster_prob(h_value, algebra=None) -> float:
    """H_i(1): scalar value, or the (truncated) coefficient sum in series mode."""
    if isinstance(h_value, np.ndarray):
        return float(np.sum(h_value))
    return float(h_value)


def percolating_fraction(h1_values) -> float:
    """S = 1 - mean_i H_i(1)."""
    vals = np.asarray(list(h1_values), dtype=float)
    return float(1.0 - vals.mean())


@dataclass
class PercolationReport:
    """Per-node observables plus the global percolating fraction."""

    p: float
    r: int
    mode: str
    n: int
    z: float
    s_max: int | None
    loop_bound_fulfilled: bool
    S: float
    iterations: int
    delta: float
    h1: list
    mean_size: list
    pi: list | None = None
    tail: list | None = None
    hz: list | None = None
    passes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        nodes = []
        for i in range(self.n):
            row = {"id": i, "h1": self.h1[i], "mean_size": self.mean_size[i]}
            if self.pi is not None:
                row["pi"] = self.pi[i]
                row["tail"] = self.tail[i]
            if self.hz is not None:
                row["hz"] = self.hz[i]
            nodes.append(row)
        out = {
            "p": self.p, "r": self.r, "mode": self.mode, "z": self.z,
            "s_max": self.s_max, "loop_bound_fulfilled": self.loop_bound_fulfilled,
            "S": self.S, "iterations": self.iterations, "delta": self.delta,
            "nodes": nodes, "passes": self.passes,
        }
        return out

    def to_csv(self) -> str:
        if self.pi is None:
            raise GraphFormatError("CSV report requires series mode (s_max)")
        lines = ["node,s,pi"]
        for i in range(self.n):
            for s, val in enumerate(self.pi[i], start=1):
                lines.append(f"{i},{s},{val:.17g}")
        return "\n".join(lines) + "\n"


def run_percolation(graph: WeightedGraph, config: PercConfig) -> PercolationReport:
    """classify -> iterate -> infer, in the mode the verdict allows."""
    config.check()
    if not graph.connected:
        raise DisconnectedGraphError("percolation requires a connected base graph")
    system = classify(graph, config.r)
    mode = config.mode
    if mode == "auto":
        mode = "bounded" if system.loop_bound_fulfilled else "unbounded"
    if mode == "bounded" and not system.loop_bound_fulfilled and not config.allow_approx:
        raise LoopBoundError(
            f"bounded mode forced but the loop bound is not fulfilled at r={config.r}"
        )
    if mode == "bounded":
        engine = BoundedPercolation(graph, system, config)
    else:
        schedule = build_schedules(graph, config.r, system)
        engine = UnboundedPercolation(graph, system, schedule, config)

    passes = {}
    # scalar pass at z = 1: h1, <s_i>
    alg1 = ScalarAlgebra(1.0)
    state1, it1, delta1 = engine.converge(alg1)
    passes["scalar_z1"] = {"iterations": it1, "delta": delta1}
    h1 = [small_cluster_prob(engine.infer_node(state1, i, alg1)) for i in range(graph.n)]
    try:
        mean_size = [float(v) for v in engine.expected_sizes(state1)]
    except ConvergenceError as exc:
        # the derivative linearization can be non-contracting (e.g. the
        # unbounded scheme at p near 1 effectively unrolls a cyclic graph);
        # report the other observables and record the failure
        mean_size = [None] * graph.n
        passes["mean_size_error"] = str(exc)

    pi = tail = None
    iterations, delta = it1, delta1
    if config.s_max is not None:
        algs = SeriesAlgebra(config.s_max)
        states, its, deltas = engine.converge(algs)
        passes["series"] = {"iterations": its, "delta": deltas}
        pi, tail = [], []
        for i in range(graph.n):
            h = engine.infer_node(states, i, algs)
            coeffs = [float(c) for c in h[1:]]
            pi.append(coeffs)
            tail.append(float(max(0.0, 1.0 - sum(coeffs))))
        iterations, delta = its, deltas

    hz = None
    if config.z != 1.0:
        algz = ScalarAlgebra(config.z)
        statez, itz, deltaz = engine.converge(algz)
        passes["scalar_z"] = {"iterations": itz, "delta": deltaz, "z": config.z}
        hz = [float(engine.infer_node(statez, i, algz)) for i in range(graph.n)]

    return PercolationReport(
        p=config.p, r=config.r, mode=mode, n=graph.n, z=config.z,
        s_max=config.s_max, loop_bound_fulfilled=system.loop_bound_fulfilled,
        S=percolating_fraction(h1), iterations=iterations, delta=delta,
        h1=[float(v) for v in h1], mean_size=mean_size, pi=pi, tail=tail, hz=hz,
        passes=passes,
    )
