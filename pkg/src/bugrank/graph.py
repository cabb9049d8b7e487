"""Bug-package bipartite graph, its bug-bug one-mode projection, and analytics.

Node order in every graph is ascending bug id, so feature and label
matrices align reproducibly. The projection is unweighted: two bugs are
adjacent iff they co-affect at least one package. Graphs are immutable
after construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus
from .errors import BugrankError, LengthMismatch


class SingletonGraph(BugrankError):
    pass


class NonConvergence(BugrankError):
    pass


class DegenerateInput(BugrankError):
    pass


@dataclass(frozen=True)
class BipartiteGraph:
    bug_ids: tuple[int, ...]
    package_ids: tuple[str, ...]
    edges: frozenset[tuple[int, int, datetime]]  # (bug index, package index, timestamp)

    def __post_init__(self):
        nb, np_ = len(self.bug_ids), len(self.package_ids)
        seen: set[tuple[int, int]] = set()
        for b, p, _ in self.edges:
            if not (0 <= b < nb and 0 <= p < np_):
                raise ValueError(f"edge endpoint out of range: ({b}, {p})")
            if (b, p) in seen:
                raise ValueError(f"duplicate edge for pair ({b}, {p})")
            seen.add((b, p))


@dataclass(frozen=True)
class BugBugGraph:
    node_ids: tuple[int, ...]
    adjacency: frozenset[tuple[int, int]]  # index pairs with i < j
    _neighbors: tuple[tuple[int, ...], ...] = field(
        init=False, repr=False, compare=False, default=None
    )

    def __post_init__(self):
        if list(self.node_ids) != sorted(self.node_ids):
            raise ValueError("node ids must be ascending")
        n = len(self.node_ids)
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for i, j in self.adjacency:
            if i == j:
                raise ValueError(f"self-loop at index {i}")
            if not (0 <= i < j < n):
                raise ValueError(f"bad adjacency pair ({i}, {j})")
            nbrs[i].add(j)
            nbrs[j].add(i)
        object.__setattr__(
            self, "_neighbors", tuple(tuple(sorted(s)) for s in nbrs)
        )

    @property
    def n(self) -> int:
        return len(self.node_ids)

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self._neighbors[i]

    def degree(self, i: int) -> int:
        return len(self._neighbors[i])

    def degrees(self) -> np.ndarray:
        return np.array([len(nb) for nb in self._neighbors], dtype=np.int64)

    def has_edge(self, i: int, j: int) -> bool:
        if i == j:
            return False
        a, b = (i, j) if i < j else (j, i)
        return (a, b) in self.adjacency

    def index_of(self, bug_id: int) -> int:
        # node_ids is sorted ascending
        lo = int(np.searchsorted(np.asarray(self.node_ids), bug_id))
        if lo >= self.n or self.node_ids[lo] != bug_id:
            raise KeyError(bug_id)
        return lo

    def adjacency_matrix(self) -> sp.csr_matrix:
        """Symmetric 0/1 adjacency as CSR."""
        n = self.n
        rows, cols = [], []
        for i, j in sorted(self.adjacency):
            rows += [i, j]
            cols += [j, i]
        data = np.ones(len(rows), dtype=np.float64)
        return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def build_bipartite(corpus: Corpus, cutoff: datetime) -> BipartiteGraph:
    """Bipartite graph of bugs vs packages affected at or before ``cutoff``.

    One edge per (bug, package) pair, keeping the earliest timestamp. Bugs
    with no qualifying package remain as isolated bug nodes.
    """
    bug_ids = tuple(sorted(corpus.ids()))
    bug_index = {bid: i for i, bid in enumerate(bug_ids)}
    earliest: dict[tuple[int, str], datetime] = {}
    for rec in corpus:
        for ts, pkg in rec.affected:
            if ts > cutoff:
                continue
            key = (bug_index[rec.id], pkg)
            if key not in earliest or ts < earliest[key]:
                earliest[key] = ts
    package_ids = tuple(sorted({pkg for _, pkg in earliest}))
    pkg_index = {pkg: i for i, pkg in enumerate(package_ids)}
    edges = frozenset(
        (b, pkg_index[pkg], ts) for (b, pkg), ts in earliest.items()
    )
    return BipartiteGraph(bug_ids, package_ids, edges)


def project(bg: BipartiteGraph) -> BugBugGraph:
    """One-mode projection: bugs adjacent iff they co-affect a package."""
    by_package: dict[int, list[int]] = {}
    for b, p, _ in bg.edges:
        by_package.setdefault(p, []).append(b)
    pairs: set[tuple[int, int]] = set()
    for members in by_package.values():
        members = sorted(set(members))
        for a_pos, i in enumerate(members):
            for j in members[a_pos + 1:]:
                pairs.add((i, j))
    return BugBugGraph(bg.bug_ids, frozenset(pairs))


def degree_centrality(g: BugBugGraph) -> np.ndarray:
    """Degree normalized by (n - 1)."""
    if g.n < 2:
        raise SingletonGraph(f"degree centrality needs >= 2 nodes, got {g.n}")
    return g.degrees().astype(np.float64) / (g.n - 1)


def clustering_coefficient(g: BugBugGraph) -> np.ndarray:
    """Local clustering; zero for nodes of degree < 2."""
    out = np.zeros(g.n, dtype=np.float64)
    for v in range(g.n):
        nbrs = g.neighbors(v)
        k = len(nbrs)
        if k < 2:
            continue
        links = 0
        for a_pos, a in enumerate(nbrs):
            for b in nbrs[a_pos + 1:]:
                if g.has_edge(a, b):
                    links += 1
        out[v] = 2.0 * links / (k * (k - 1))
    return out


def pagerank(g: BugBugGraph, damping: float = 0.85, tol: float = 1e-10) -> np.ndarray:
    """Damped random-walk fixed point; isolated nodes redistribute uniformly."""
    if g.n == 0:
        raise SingletonGraph("pagerank needs a non-empty graph")
    n = g.n
    deg = g.degrees().astype(np.float64)
    dangling = deg == 0
    adj = g.adjacency_matrix()
    with np.errstate(divide="ignore"):
        inv_deg = np.where(dangling, 0.0, 1.0 / np.where(dangling, 1.0, deg))
    # column-stochastic walk matrix: P[v, u] = 1/deg(u) for u ~ v
    walk = adj.multiply(inv_deg[np.newaxis, :]).tocsr()
    x = np.full(n, 1.0 / n)
    for _ in range(10_000):
        new_x = damping * (walk @ x + x[dangling].sum() / n) + (1.0 - damping) / n
        if np.abs(new_x - x).sum() < tol:
            return new_x
        x = new_x
    raise NonConvergence("pagerank did not converge within 10000 iterations")


@dataclass(frozen=True)
class CentralityReport:
    node_ids: tuple[int, ...]
    degree_centrality: np.ndarray
    clustering_coefficient: np.ndarray
    pagerank: np.ndarray

    def __post_init__(self):
        n = len(self.node_ids)
        for name in ("degree_centrality", "clustering_coefficient", "pagerank"):
            values = getattr(self, name)
            if len(values) != n:
                raise LengthMismatch(f"{name} has {len(values)} entries for {n} nodes")
        if abs(self.pagerank.sum() - 1.0) > 1e-9:
            raise ValueError(f"pagerank sums to {self.pagerank.sum()}, not 1")
        for name in ("degree_centrality", "clustering_coefficient"):
            values = getattr(self, name)
            if values.min() < 0.0 or values.max() > 1.0:
                raise ValueError(f"{name} outside [0, 1]")


def centrality_report(g: BugBugGraph) -> CentralityReport:
    """All three per-node measures in one node-aligned bundle."""
    return CentralityReport(
        node_ids=g.node_ids,
        degree_centrality=degree_centrality(g),
        clustering_coefficient=clustering_coefficient(g),
        pagerank=pagerank(g),
    )


def average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks of ``values`` ascending, ties averaged."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(rank_a, rank_b) -> float:
    """Spearman rho with average ranks for ties."""
    a = np.asarray(rank_a, dtype=np.float64)
    b = np.asarray(rank_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(f"inputs must be equal-length vectors: {a.shape} vs {b.shape}")
    if len(a) < 2:
        raise LengthMismatch("need at least 2 observations")
    if np.all(a == a[0]) or np.all(b == b[0]):
        raise DegenerateInput("constant input has no rank ordering")
    ra = average_ranks(a)
    rb = average_ranks(b)
    ra -= ra.mean()
    rb -= rb.mean()
    return float((ra * rb).sum() / np.sqrt((ra * ra).sum() * (rb * rb).sum()))


def centrality_heat_correlation(g: BugBugGraph, heat, k: int) -> dict:
    """Spearman rho of heat vs each centrality over the top-k and bottom-k
    heat-ranked bugs. Heat ties break by ascending bug id for the selection."""
    heat = np.asarray(heat, dtype=np.float64)
    if len(heat) != g.n:
        raise LengthMismatch(f"heat length {len(heat)} != node count {g.n}")
    if k > g.n / 2:
        raise ValueError(f"k={k} exceeds half the node count ({g.n})")
    centralities = centrality_report(g)
    measures = {
        "degree": centralities.degree_centrality,
        "clustering": centralities.clustering_coefficient,
        "pagerank": centralities.pagerank,
    }
    order = np.lexsort((np.arange(g.n), -heat))  # heat descending, id ascending
    top = order[:k]
    bottom = order[-k:]
    report = {}
    for name, values in measures.items():
        report[name] = {
            "top": spearman(heat[top], values[top]),
            "bottom": spearman(heat[bottom], values[bottom]),
        }
    return report


def save_edge_list(g: BugBugGraph, path: str | Path) -> None:
    """Write ``bug_id<TAB>bug_id`` lines plus a ``*.nodes.json`` sidecar."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for i, j in sorted(g.adjacency):
            fh.write(f"{g.node_ids[i]}\t{g.node_ids[j]}\n")
    sidecar = path.with_name(path.name + ".nodes.json")
    sidecar.write_text(json.dumps({"node_ids": list(g.node_ids)}) + "\n", encoding="utf-8")


def load_edge_list(path: str | Path) -> BugBugGraph:
    path = Path(path)
    sidecar = path.with_name(path.name + ".nodes.json")
    node_ids = tuple(json.loads(sidecar.read_text(encoding="utf-8"))["node_ids"])
    index = {bid: i for i, bid in enumerate(node_ids)}
    pairs = set()
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            a, b = (int(tok) for tok in line.split("\t"))
            i, j = index[a], index[b]
            pairs.add((min(i, j), max(i, j)))
    return BugBugGraph(node_ids, frozenset(pairs))
