"""Network topologies and their matrix encodings.

Edges are stored as ``(i, j)`` pairs with ``i < j`` in lexicographic order.
That order fixes the row index of every edge in the incidence matrix and the
index of every dual (edge) variable elsewhere in the package.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from ._rng import make_rng

__all__ = [
    "Graph",
    "Partition",
    "GraphConnectivityError",
    "UnionFind",
    "make_cycle",
    "make_path",
    "make_complete",
    "make_grid2d",
    "make_rgg",
    "incidence_matrix",
    "laplacian",
    "degree_matrix",
    "connected_components",
    "write_edgelist",
    "read_edgelist",
]


class GraphConnectivityError(RuntimeError):
    """Raised when a random topology stays disconnected after all retries."""


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes ``0..n-1``.

    ``info`` carries generator metadata (e.g. RGG points and retry count) and
    does not take part in equality or hashing.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    info: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"node count must be positive, got {self.n}")
        seen = set()
        for i, j in self.edges:
            if not (0 <= i < j < self.n):
                raise ValueError(f"invalid edge ({i}, {j}) for n={self.n}")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
        if list(self.edges) != sorted(self.edges):
            raise ValueError("edges must be in lexicographic order")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]], info=None) -> "Graph":
        """Normalize orientation, drop nothing, sort, and validate."""
        norm = []
        for e in edges:
            i, j = int(e[0]), int(e[1])
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            norm.append((min(i, j), max(i, j)))
        return cls(int(n), tuple(sorted(norm)), dict(info or {}))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def ei(self) -> np.ndarray:
        return np.array([e[0] for e in self.edges], dtype=np.int64)

    @cached_property
    def ej(self) -> np.ndarray:
        return np.array([e[1] for e in self.edges], dtype=np.int64)

    @cached_property
    def degrees(self) -> np.ndarray:
        d = np.zeros(self.n, dtype=np.int64)
        np.add.at(d, self.ei, 1)
        np.add.at(d, self.ej, 1)
        return d

    @cached_property
    def adjacency(self) -> tuple[frozenset, ...]:
        nbrs = [set() for _ in range(self.n)]
        for i, j in self.edges:
            nbrs[i].add(j)
            nbrs[j].add(i)
        return tuple(frozenset(s) for s in nbrs)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(indptr, neighbor, edge_id)``; each node's neighbors follow incident-edge order."""
        inc = [[] for _ in range(self.n)]
        for e, (i, j) in enumerate(self.edges):
            inc[i].append((e, j))
            inc[j].append((e, i))
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        nbr, eid = [], []
        for v in range(self.n):
            for e, u in inc[v]:
                eid.append(e)
                nbr.append(u)
            indptr[v + 1] = len(nbr)
        return indptr, np.array(nbr, dtype=np.int64), np.array(eid, dtype=np.int64)

    def incident_edges(self, node: int) -> np.ndarray:
        indptr, _, eid = self.csr
        return eid[indptr[node]:indptr[node + 1]]

    @cached_property
    def is_connected(self) -> bool:
        seen = np.zeros(self.n, dtype=bool)
        seen[0] = True
        stack = [0]
        adj = self.adjacency
        while stack:
            v = stack.pop()
            for u in adj[v]:
                if not seen[u]:
                    seen[u] = True
                    stack.append(u)
        return bool(seen.all())


@dataclass(frozen=True)
class Partition:
    component_of: np.ndarray
    components: tuple[tuple[int, ...], ...]

    @property
    def q(self) -> int:
        return len(self.components)

    def nontrivial(self) -> list[tuple[int, ...]]:
        return [c for c in self.components if len(c) > 1]


class UnionFind:
    """Disjoint sets over ``0..n-1`` with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a: int) -> int:
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


def make_cycle(n: int) -> Graph:
    if n < 3:
        raise ValueError(f"cycle needs n >= 3, got {n}")
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)], {"family": "cycle"})


def make_path(n: int) -> Graph:
    if n < 2:
        raise ValueError(f"path needs n >= 2, got {n}")
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)], {"family": "path"})


def make_complete(n: int) -> Graph:
    if n < 2:
        raise ValueError(f"complete graph needs n >= 2, got {n}")
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)],
                            {"family": "complete"})


def make_grid2d(rows: int, cols: int) -> Graph:
    """Lattice graph; node ``r * cols + c`` sits at row ``r``, column ``c``."""
    if rows < 2 or cols < 2:
        raise ValueError(f"grid needs rows, cols >= 2, got {rows}x{cols}")
    edges = []
    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            if c + 1 < cols:
                edges.append((u, u + 1))
            if r + 1 < rows:
                edges.append((u, u + cols))
    return Graph.from_edges(rows * cols, edges, {"family": "grid", "rows": rows, "cols": cols})


def rgg_default_radius(n: int) -> float:
    return math.sqrt(math.log(n) / n)


def make_rgg(n: int, radius: float | None = None, seed=0, max_retries: int = 100) -> Graph:
    """Random geometric graph on ``n`` uniform points in the unit square.

    Each attempt draws a fresh point set from its own child stream of
    ``seed``; the first connected sample is returned.  ``info["retries"]``
    records how many samples were rejected.
    """
    if n < 2:
        raise ValueError(f"RGG needs n >= 2, got {n}")
    if radius is None:
        radius = rgg_default_radius(n)
    if not (0.0 < radius <= math.sqrt(2.0)):
        raise ValueError(f"radius must lie in (0, sqrt(2)], got {radius}")
    children = np.random.SeedSequence(seed).spawn(max_retries)
    for attempt, child in enumerate(children):
        pts = make_rng(child).random((n, 2))
        pairs = cKDTree(pts).query_pairs(radius, output_type="ndarray")
        g = Graph.from_edges(n, pairs.tolist(),
                             {"family": "rgg", "radius": radius, "points": pts,
                              "retries": attempt})
        if g.is_connected:
            return g
    raise GraphConnectivityError(
        f"RGG(n={n}, radius={radius:.6g}) disconnected in all {max_retries} samples; "
        "increase the radius or the retry bound")


def incidence_matrix(g: Graph, normalized: bool = False) -> np.ndarray:
    """``m x n`` matrix with ``+1`` at column ``i`` and ``-1`` at column ``j`` for edge ``(i, j)``.

    ``normalized=True`` scales every row to unit Euclidean norm.
    """
    q = np.zeros((g.m, g.n))
    rows = np.arange(g.m)
    val = 1.0 / math.sqrt(2.0) if normalized else 1.0
    q[rows, g.ei] = val
    q[rows, g.ej] = -val
    return q


def degree_matrix(g: Graph) -> np.ndarray:
    return np.diag(g.degrees.astype(float))


def laplacian(g: Graph) -> np.ndarray:
    lap = degree_matrix(g)
    lap[g.ei, g.ej] -= 1.0
    lap[g.ej, g.ei] -= 1.0
    return lap


def connected_components(g: Graph, subset: Iterable[int] = ()) -> Partition:
    """Components of the spanning subgraph whose edges are ``subset``.

    Nodes touched by no selected edge come out as singleton components.
    Components are listed in order of their smallest node.
    """
    uf = UnionFind(g.n)
    idx = list(subset)
    if len(set(idx)) != len(idx):
        raise ValueError("edge subset has repeated indices")
    for e in idx:
        if not (0 <= e < g.m):
            raise ValueError(f"edge index {e} out of range [0, {g.m})")
        i, j = g.edges[e]
        uf.union(i, j)
    roots = [uf.find(v) for v in range(g.n)]
    label: dict[int, int] = {}
    members: list[list[int]] = []
    comp = np.empty(g.n, dtype=np.int64)
    for v, r in enumerate(roots):
        if r not in label:
            label[r] = len(members)
            members.append([])
        comp[v] = label[r]
        members[label[r]].append(v)
    return Partition(comp, tuple(tuple(c) for c in members))


def write_edgelist(g: Graph, path) -> None:
    """Header ``n m`` then one ``i j`` line per edge."""
    lines = [f"{g.n} {g.m}"] + [f"{i} {j}" for i, j in g.edges]
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write edge list to {os.fspath(path)!r}: {exc}") from exc


def read_edgelist(path) -> Graph:
    try:
        with open(path) as fh:
            rows = [ln.split() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    except OSError as exc:
        raise OSError(f"cannot read edge list {os.fspath(path)!r}: {exc}") from exc
    if not rows or len(rows[0]) != 2:
        raise ValueError(f"{os.fspath(path)!r}: missing 'n m' header")
    n, m = int(rows[0][0]), int(rows[0][1])
    edges = [(int(a), int(b)) for a, b in rows[1:]]
    if len(edges) != m:
        raise ValueError(f"{os.fspath(path)!r}: header announces {m} edges, found {len(edges)}")
    return Graph.from_edges(n, edges)
