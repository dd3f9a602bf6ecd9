"""Spectral density of sparse symmetric matrices via complex messages.

Each message H_{c->k}(z) is the generating value of weighted excursions
from k that stay inside class c, with closed walks from k's *other* classes
resummed at every intermediate visit. One visit to node s contributes the
factor 1/(z - sum_{c' != c} H_{c'->s}(z)) -- a closed walk at s is an
arbitrary interleaving of excursions from s's other classes, so the
resummation is geometric in the *sum* of their messages (the per-node
factor; a node with no other classes contributes 1/z). The spec's literal
alternative D_ss = prod (z - H) is available via literal_d for comparison;
it deviates whenever a member sits in 0 or >= 2 other classes.

With v the vector of matrix elements on class edges at k and A_loc the
class adjacency among members != k, the walk sum is the small dense solve

    H_{c->k}(z) = v^T (D - A_loc)^{-1} v,      D_ss = 1 / F_{s\\c}(z).

Inference: H_i(z) = A_ii + sum_{c in classes(i)} (walk sum rooted at i);
density: rho(x) = -(1/(n pi)) Im sum_i 1/(z - H_i(z)) at z = x + i eta,
clipped at zero for reporting (raw value kept). Self-loops carry constant
trivial messages A_kk which enter every per-node factor of the looped node.

The unbounded variant keys messages (source pair -> target pair), restricts
v and A_loc to the source class edges not yet incorporated under the
target's schedule (an empty set makes the message identically zero), and
sums *all* pair messages into the source pair in each per-node factor.

eta > 0 keeps every denominator away from the real axis: messages satisfy
Im H <= 0 (checked each sweep; violation flags numerical failure).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, GraphFormatError, LoopBoundError
from .graphs import WeightedGraph
from .neighborhoods import (
    NeighborhoodSystem,
    UnboundedSchedule,
    build_schedules,
    classify,
)

IM_SIGN_TOL = 1e-9


@dataclass
class SpectralConfig:
    """Grid sweep configuration; defaults follow the engine contracts."""

    eta: float = 0.05
    x_min: float = -3.0
    x_max: float = 3.0
    points: int = 601
    r: int = 1
    mode: str = "auto"            # auto | bounded | unbounded
    tol: float = 1e-10
    max_iter: int = 10000
    damping: float = 0.0
    warm_start: bool = True
    literal_d: bool = False
    allow_approx: bool = False

    def check(self) -> None:
        if self.eta <= 0:
            raise GraphFormatError("eta must be > 0")
        if self.points < 1:
            raise GraphFormatError("points must be >= 1")
        if self.mode not in ("auto", "bounded", "unbounded"):
            raise GraphFormatError(f"unknown mode {self.mode!r}")
        if not 0.0 <= self.damping < 1.0:
            raise GraphFormatError("damping must be in [0, 1)")

    def grid(self) -> np.ndarray:
        if self.points == 1:
            return np.array([0.5 * (self.x_min + self.x_max)])
        return np.linspace(self.x_min, self.x_max, self.points)

    def to_dict(self) -> dict:
        return {
            "eta": self.eta, "x_min": self.x_min, "x_max": self.x_max,
            "points": self.points, "r": self.r, "mode": self.mode,
            "tol": self.tol, "max_iter": self.max_iter, "damping": self.damping,
            "warm_start": self.warm_start, "literal_d": self.literal_d,
            "allow_approx": self.allow_approx,
        }


@dataclass(frozen=True)
class LocalSystem:
    """One small dense solve: H = v^T (D - A_loc)^{-1} v."""

    members: tuple[int, ...]
    v: np.ndarray
    a_local: np.ndarray
    d: np.ndarray

    def solve(self) -> complex:
        if len(self.members) == 0:
            return 0.0 + 0.0j
        if len(self.members) == 1:
            return complex(self.v[0] * self.v[0] / (self.d[0] - self.a_local[0, 0]))
        m = np.diag(self.d) - self.a_local
        x = np.linalg.solve(m, self.v.astype(complex))
        return complex(self.v @ x)


class _SpectralBase:
    """Shared sweep/inference machinery; subclasses define keys and factors."""

    def __init__(self, graph: WeightedGraph, system: NeighborhoodSystem, config: SpectralConfig):
        self.graph = graph
        self.system = system
        self.config = config
        self.a_diag = {k: graph.weight(k, k) for k in range(graph.n)}

    def node_factor_inverse(self, messages: list[complex], z: complex) -> complex:
        """1/F for a node given its per-class messages (excluded class removed).

        Adopted convention: z - sum(messages). Literal alternative:
        prod (z - m), which is 1 for a node with no other classes.
        """
        if self.config.literal_d:
            out = 1.0 + 0.0j
            for m in messages:
                out *= z - m
            return out
        return z - sum(messages)

    def _check_sign(self, value: complex, state) -> complex:
        if value.imag > IM_SIGN_TOL:
            raise ConvergenceError(
                f"message imaginary part {value.imag:.3g} > 0 (resolvent sign violated)",
                partial=state,
            )
        return value

    def converge(self, z: complex, state: dict | None = None):
        cfg = self.config
        if state is None:
            state = {k: 0.0 + 0.0j for k in self.keys}
        delta = float("inf")
        history: list[float] = []
        for it in range(1, cfg.max_iter + 1):
            new = self.sweep(state, z)
            delta = 0.0
            for k, v in new.items():
                if not np.isfinite(v):
                    raise ConvergenceError("non-finite spectral message", partial=state)
                d = abs(v - state[k])
                if d > delta:
                    delta = d
            if cfg.damping > 0.0:
                new = {k: cfg.damping * state[k] + (1.0 - cfg.damping) * v for k, v in new.items()}
            state = new
            if delta < cfg.tol:
                return state, it, delta
            history.append(delta)
            if len(history) > 50 and delta >= history[-51] * 0.98:
                raise ConvergenceError(
                    f"spectral iteration stalled after {it} sweeps (delta {delta:.3g})",
                    partial=state,
                )
        raise ConvergenceError(
            f"spectral messages did not converge after {cfg.max_iter} sweeps "
            f"(last delta {delta:.3g})",
            partial=state,
        )


class BoundedSpectral(_SpectralBase):
    """Messages keyed (class id, member); exact when the verdict holds."""

    def __init__(self, graph, system, config):
        super().__init__(graph, system, config)
        self.keys = [
            (cid, k)
            for k in range(graph.n)
            for cid in system.nontrivial_classes_of(k)
        ]
        self._struct: dict = {}

    def _structure(self, cid: int, root: int):
        """Cached (members, v, a_local) for one class/root pair."""
        st = self._struct.get((cid, root))
        if st is None:
            cls = self.system.classes[cid]
            members = tuple(s for s in sorted(cls.nodes) if s != root)
            v = np.array([
                self.graph.weight(root, s) if (min(root, s), max(root, s)) in cls.edges else 0.0
                for s in members
            ])
            a_local = np.zeros((len(members), len(members)))
            for a, s in enumerate(members):
                for b, t in enumerate(members):
                    if a != b and (min(s, t), max(s, t)) in cls.edges:
                        a_local[a, b] = self.graph.weight(s, t)
            st = (members, v, a_local)
            self._struct[(cid, root)] = st
        return st

    def _messages_at(self, state: dict, s: int, exclude_cid: int) -> list[complex]:
        out = []
        for q in self.system.classes_of(s):
            if q == exclude_cid:
                continue
            if self.system.is_trivial[q]:
                out.append(self.a_diag[s] + 0.0j)
            else:
                out.append(state[(q, s)])
        return out

    def local_system(self, state: dict, cid: int, root: int, z: complex) -> LocalSystem:
        members, v, a_local = self._structure(cid, root)
        d = np.array([
            self.node_factor_inverse(self._messages_at(state, s, cid), z)
            for s in members
        ])
        return LocalSystem(members=members, v=v, a_local=a_local, d=d)

    def sweep(self, state: dict, z: complex) -> dict:
        new = {}
        for cid, k in self.keys:
            val = self.local_system(state, cid, k, z).solve()
            new[(cid, k)] = self._check_sign(val, state)
        return new

    def infer_node(self, state: dict, i: int, z: complex) -> complex:
        total = self.a_diag[i] + 0.0j
        for cid in self.system.nontrivial_classes_of(i):
            total += self.local_system(state, cid, i, z).solve()
        return total


class UnboundedSpectral(_SpectralBase):
    """Messages keyed (root k, other q, target pair); schedule-filtered."""

    def __init__(self, graph, system, schedule: UnboundedSchedule, config):
        super().__init__(graph, system, config)
        self.schedule = schedule
        self.keys = []
        self.msg_edges = {}
        for tgt in schedule.targets:
            cls = UnboundedSchedule.source_class(system, *tgt)
            for k in sorted(cls.nodes):
                for q in sorted(system.primaries[k].nodes - {k}):
                    key = (k, q, tgt)
                    self.keys.append(key)
                    self.msg_edges[key] = schedule.message_edges(system, tgt, (k, q))
        self._struct: dict = {}

    def _structure(self, edges: frozenset, root: int):
        st = self._struct.get((root, edges))
        if st is None:
            touched = sorted({v for e in edges for v in e})
            members = tuple(s for s in touched if s != root)
            v = np.array([
                self.graph.weight(root, s) if (min(root, s), max(root, s)) in edges else 0.0
                for s in members
            ])
            a_local = np.zeros((len(members), len(members)))
            for a, s in enumerate(members):
                for b, t in enumerate(members):
                    if a != b and (min(s, t), max(s, t)) in edges:
                        a_local[a, b] = self.graph.weight(s, t)
            st = (members, v, a_local)
            self._struct[(root, edges)] = st
        return st

    def _messages_into(self, state: dict, s: int, pair: tuple[int, int]) -> list[complex]:
        out = [
            state[(s, v, pair)]
            for v in sorted(self.system.primaries[s].nodes - {s})
        ]
        if s in self.graph.self_loops:
            out.append(self.a_diag[s] + 0.0j)  # trivial pair message (s,s)
        return out

    def _walk_sum(self, state: dict, edges: frozenset, root: int,
                  pair: tuple[int, int], z: complex) -> complex:
        members, v, a_local = self._structure(edges, root)
        if not members:
            return 0.0 + 0.0j
        d = np.array([
            self.node_factor_inverse(self._messages_into(state, s, pair), z)
            for s in members
        ])
        return LocalSystem(members=members, v=v, a_local=a_local, d=d).solve()

    def sweep(self, state: dict, z: complex) -> dict:
        new = {}
        for key in self.keys:
            k, q, tgt = key
            src = (min(k, q), max(k, q))
            val = self._walk_sum(state, self.msg_edges[key], k, src, z)
            new[key] = self._check_sign(val, state)
        return new

    def infer_node(self, state: dict, i: int, z: complex) -> complex:
        total = self.a_diag[i] + 0.0j
        for j in sorted(self.system.primaries[i].nodes - {i}):
            edges = self.schedule.inference_edges(self.system, i, j)
            pair = (min(i, j), max(i, j))
            total += self._walk_sum(state, edges, i, pair, z)
        return total


def density_at(h_values, z: complex, n: int | None = None) -> tuple[float, float]:
    """(clipped, raw) rho = Im[-(1/(n pi)) sum_i 1/(z - H_i(z))]."""
    h = list(h_values)
    n = len(h) if n is None else n
    raw = float(np.imag(-sum(1.0 / (z - hi) for hi in h)) / (n * np.pi))
    return max(raw, 0.0), raw


@dataclass
class SpectrumReport:
    """Grid samples (x, rho) plus sweep metadata."""

    eta: float
    r: int
    mode: str
    n: int
    loop_bound_fulfilled: bool
    x: list
    rho: list
    rho_raw: list = field(repr=False, default_factory=list)
    iterations: list = field(repr=False, default_factory=list)
    errors: list = field(repr=False, default_factory=list)
    mass_estimate: float = 0.0
    h_diag: list = field(repr=False, default_factory=list)  # per-x list of H_i(z)

    def to_csv(self) -> str:
        lines = ["x,rho"]
        for x, rho in zip(self.x, self.rho):
            lines.append(f"{x:.17g},{rho:.17g}")
        return "\n".join(lines) + "\n"

    def metadata(self) -> dict:
        return {
            "eta": self.eta,
            "r": self.r,
            "mode": self.mode,
            "n": self.n,
            "loop_bound_fulfilled": self.loop_bound_fulfilled,
            "mass_estimate": self.mass_estimate,
            "per_x_iterations": self.iterations,
            "errors": [e for e in self.errors if e],
        }

    def to_dict(self) -> dict:
        out = self.metadata()
        out["rows"] = [
            {"x": x, "rho": rho, "rho_raw": raw}
            for x, rho, raw in zip(self.x, self.rho, self.rho_raw)
        ]
        return out


def make_engine(graph: WeightedGraph, config: SpectralConfig):
    """Resolve mode against the verdict and build the engine."""
    config.check()
    system = classify(graph, config.r)
    mode = config.mode
    if mode == "auto":
        mode = "bounded" if system.loop_bound_fulfilled else "unbounded"
    if mode == "bounded" and not system.loop_bound_fulfilled and not config.allow_approx:
        raise LoopBoundError(
            f"bounded mode forced but the loop bound is not fulfilled at r={config.r}"
        )
    if mode == "bounded":
        return BoundedSpectral(graph, system, config), mode, system
    schedule = build_schedules(graph, config.r, system)
    return UnboundedSpectral(graph, system, schedule, config), mode, system


def sweep_spectrum(graph: WeightedGraph, config: SpectralConfig) -> SpectrumReport:
    """Iterate to convergence once per grid point; warm-start if configured.

    A non-converged point records its error and the sweep continues.
    """
    engine, mode, system = make_engine(graph, config)
    xs = config.grid()
    rho, rho_raw, its, errs, h_diag = [], [], [], [], []
    state = None
    for x in xs:
        z = complex(x, config.eta)
        start = state if config.warm_start else None
        try:
            st, it, _ = engine.converge(z, dict(start) if start else None)
            hs = [engine.infer_node(st, i, z) for i in range(graph.n)]
            clipped, raw = density_at(hs, z)
            state = st
            rho.append(clipped)
            rho_raw.append(raw)
            its.append(it)
            errs.append(None)
            h_diag.append(hs)
        except ConvergenceError as exc:
            rho.append(float("nan"))
            rho_raw.append(float("nan"))
            its.append(config.max_iter)
            errs.append(str(exc))
            h_diag.append(None)
    mass = 0.0
    good = [(x, r_) for x, r_ in zip(xs, rho) if np.isfinite(r_)]
    if len(good) > 1:
        gx = np.array([g[0] for g in good])
        gr = np.array([g[1] for g in good])
        mass = float(np.trapezoid(gr, gx))
    return SpectrumReport(
        eta=config.eta, r=config.r, mode=mode, n=graph.n,
        loop_bound_fulfilled=system.loop_bound_fulfilled,
        x=[float(v) for v in xs], rho=rho, rho_raw=rho_raw,
        iterations=its, errors=errs, mass_estimate=mass, h_diag=h_diag,
    )
