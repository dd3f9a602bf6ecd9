"""Independent ground truth at desk scale.

Percolation: exhaustive configuration enumeration (2^|E| subsets, union-find
components) and Monte-Carlo sampling. Spectra: a cyclic Jacobi eigensolver,
broadened densities from eigenvalues, dense resolvent diagonals, and
diagonal matrix powers. Nothing here shares code with the message-passing
engines.

Reproducible randomness: per-trial edge coins come from the counter-based
streams documented in rng.py -- coin(t, e) = uniform(key(seed, t), e) < p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GraphFormatError
from .graphs import WeightedGraph
from .rng import splitmix64, trial_keys, uniforms

__all__ = [
    "splitmix64",
    "trial_keys",
    "uniforms",
    "UnionFind",
    "PercOracleReport",
    "exact_percolation_enumeration",
    "McEstimate",
    "McPercReport",
    "mc_percolation",
    "dense_eigenvalues",
    "exact_density",
    "resolvent_diagonal",
    "diag_power",
]


class UnionFind:
    """Path compression + union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]

    def component_size(self, x: int) -> int:
        return self.size[self.find(x)]


@dataclass(frozen=True)
class PercOracleReport:
    """Exact per-node cluster statistics on a finite graph."""

    n: int
    p: float
    pi: np.ndarray          # shape (n, n+1); pi[i, s] = P(node i in cluster of size s)
    mean_size: np.ndarray   # shape (n,)
    h1: np.ndarray          # shape (n,); sum_s pi[i, s] (1.0 on finite graphs)

    @property
    def percolating_fraction(self) -> float:
        return 1.0 - float(np.mean(self.h1))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "S": self.percolating_fraction,
            "nodes": [
                {
                    "id": i,
                    "h1": float(self.h1[i]),
                    "mean_size": float(self.mean_size[i]),
                    "pi": [float(x) for x in self.pi[i, 1:]],
                }
                for i in range(self.n)
            ],
        }


def exact_percolation_enumeration(graph: WeightedGraph, p: float) -> PercOracleReport:
    """Iterate all 2^|E| occupation subsets of the simple edges.

    Each subset is weighted p^k (1-p)^(m-k); component sizes come from
    union-find. Exact within floating point. Self-loops are ignored (they
    never join distinct nodes).
    """
    edges = graph.simple_edges
    m = len(edges)
    if m > 24:
        raise GraphFormatError(f"exact enumeration capped at 24 edges, got {m}")
    n = graph.n
    pi = np.zeros((n, n + 1))
    mean = np.zeros(n)
    pk = np.array([p**k * (1.0 - p) ** (m - k) for k in range(m + 1)])
    for mask in range(1 << m):
        uf = UnionFind(n)
        k = 0
        for e in range(m):
            if mask >> e & 1:
                uf.union(*edges[e])
                k += 1
        w = pk[k]
        if w == 0.0:
            continue
        for i in range(n):
            s = uf.component_size(i)
            pi[i, s] += w
            mean[i] += w * s
    return PercOracleReport(n=n, p=p, pi=pi, mean_size=mean, h1=pi.sum(axis=1))


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    trials: int

    def to_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "trials": self.trials}


@dataclass(frozen=True)
class McPercReport:
    """Monte-Carlo cluster statistics with per-observable standard errors."""

    n: int
    p: float
    trials: int
    seed: int
    pi: list                     # pi[i][s] -> McEstimate, s = 1..n
    mean_size: list              # per node McEstimate
    component_fraction: McEstimate  # E[largest component]/n, the S surrogate

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "trials": self.trials,
            "seed": self.seed,
            "component_fraction": self.component_fraction.to_dict(),
            "nodes": [
                {
                    "id": i,
                    "mean_size": self.mean_size[i].to_dict(),
                    "pi": [est.to_dict() for est in self.pi[i]],
                }
                for i in range(self.n)
            ],
        }


def _estimate(samples_mean: float, samples_sqmean: float, trials: int) -> McEstimate:
    var = max(samples_sqmean - samples_mean**2, 0.0)
    if trials > 1:
        var *= trials / (trials - 1)
    return McEstimate(mean=samples_mean, stderr=float(np.sqrt(var / trials)), trials=trials)


def mc_percolation(
    graph: WeightedGraph, p: float, trials: int, seed: int = 0,
    batch: int = 200_000,
) -> McPercReport:
    """Independent edge coins per trial; components via label propagation.

    Per-trial coins come from the documented counter-based stream, so the
    estimate is deterministic in (seed, trials) and independent of batching.
    Vectorized over trials: labels start at node index and repeatedly take
    the minimum across occupied edges until stable. Per-size histograms are
    collected only for n <= 64 (quadratic in n); mean sizes and the largest
    component fraction are always collected.
    """
    if trials < 1:
        raise GraphFormatError("trials must be >= 1")
    edges = graph.simple_edges
    n = graph.n
    m = len(edges)
    collect_pi = n <= 64
    sum_sizes = np.zeros(n)
    sumsq_sizes = np.zeros(n)
    count_pi = np.zeros((n, n + 1)) if collect_pi else None
    sum_frac = 0.0
    sumsq_frac = 0.0

    done = 0
    while done < trials:
        b = min(batch, trials - done)
        keys = trial_keys(seed, done, b)
        occ = np.empty((b, m), dtype=bool)
        for e in range(m):
            occ[:, e] = uniforms(keys, e) < p
        labels = np.tile(np.arange(n, dtype=np.int64), (b, 1))
        while True:
            changed = False
            for e, (u, v) in enumerate(edges):
                sel = occ[:, e]
                if not sel.any():
                    continue
                lu = labels[sel, u]
                lv = labels[sel, v]
                mn = np.minimum(lu, lv)
                if (lu != mn).any():
                    labels[sel, u] = mn
                    changed = True
                if (lv != mn).any():
                    labels[sel, v] = mn
                    changed = True
            if not changed:
                break
        if collect_pi:
            sizes = (labels[:, :, None] == labels[:, None, :]).sum(axis=2)
            for s in range(1, n + 1):
                count_pi[:, s] += (sizes == s).sum(axis=0)
        else:
            sizes = np.empty((b, n), dtype=np.int64)
            for row in range(b):
                cnt = np.bincount(labels[row], minlength=n)
                sizes[row] = cnt[labels[row]]
        sum_sizes += sizes.sum(axis=0)
        sumsq_sizes += (sizes.astype(np.float64) ** 2).sum(axis=0)
        frac = sizes.max(axis=1).astype(np.float64) / n
        sum_frac += frac.sum()
        sumsq_frac += (frac**2).sum()
        done += b

    # indicator variables: E[X^2] = E[X]
    pi = [
        [
            _estimate(count_pi[i, s] / trials, count_pi[i, s] / trials, trials)
            for s in range(1, n + 1)
        ]
        for i in range(n)
    ] if collect_pi else []
    mean_size = [
        _estimate(sum_sizes[i] / trials, sumsq_sizes[i] / trials, trials)
        for i in range(n)
    ]
    return McPercReport(
        n=n,
        p=p,
        trials=trials,
        seed=seed,
        pi=pi,
        mean_size=mean_size,
        component_fraction=_estimate(sum_frac / trials, sumsq_frac / trials, trials),
    )


def dense_eigenvalues(a: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Cyclic Jacobi rotations until the off-diagonal Frobenius mass < tol.

    Symmetric input only; eigenvalues returned ascending.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n) or not np.allclose(a, a.T, atol=1e-12):
        raise GraphFormatError("dense_eigenvalues requires a symmetric square matrix")
    if n > 2048:
        raise GraphFormatError("dense_eigenvalues capped at n = 2048")
    if n == 1:
        return a.diagonal().copy()
    for _ in range(60):  # sweeps; Jacobi converges quadratically
        off = np.sqrt(max(np.sum(a**2) - np.sum(a.diagonal() ** 2), 0.0))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta**2 + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t**2 + 1.0)
                s = t * c
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
    return np.sort(a.diagonal())


def exact_density(eigs: np.ndarray, x: float, eta: float) -> float:
    """Broadened density: -(1/(n*pi)) Im sum_k 1/(z - lambda_k), z = x + i*eta."""
    if eta <= 0:
        raise GraphFormatError("eta must be positive")
    z = x + 1j * eta
    return float(-np.imag(np.sum(1.0 / (z - np.asarray(eigs)))) / (len(eigs) * np.pi))


def resolvent_diagonal(a: np.ndarray, z: complex, i: int) -> complex:
    """[(zI - A)^-1]_ii via one dense solve of (zI - A) x = e_i."""
    n = a.shape[0]
    rhs = np.zeros(n, dtype=complex)
    rhs[i] = 1.0
    x = np.linalg.solve(z * np.eye(n) - a, rhs)
    return complex(x[i])


def diag_power(a: np.ndarray, s: int, i: int) -> float:
    """[A^s]_ii by s matrix-vector products on e_i."""
    if s < 0:
        raise GraphFormatError("power must be >= 0")
    v = np.zeros(a.shape[0])
    v[i] = 1.0
    for _ in range(s):
        v = a @ v
    return float(v[i])
