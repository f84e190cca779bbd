"""rSPR graph construction, BFS distances and bounded distance oracles."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence, TextIO

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .spr import neighbor_keys
from .tree import Tree, canonicalize, parse_newick

__all__ = [
    "RsprGraph",
    "DistanceTable",
    "UNREACHED",
    "double_factorial",
    "enumerate_all_keys",
    "enumerate_all_trees",
    "build_graph",
    "build_full_graph",
    "bfs_distances",
    "diameter",
    "distance_on_the_fly",
    "cached_neighbor_keys",
    "write_edge_list",
    "read_edge_list",
    "GraphDistances",
    "TreeDistances",
]

UNREACHED = -1
MAX_ENUMERATION_N = 9


def double_factorial(k: int) -> int:
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def _insert_everywhere(nested, x):
    # every edge below and including the root edge; (node, x) stays canonical as x is the largest label
    yield (nested, x)
    if not isinstance(nested, int):
        a, b = nested
        for sub in _insert_everywhere(a, x):
            yield (sub, b)
        for sub in _insert_everywhere(b, x):
            yield (a, sub)


def _nested_key(nested) -> str:
    return str(nested).replace(" ", "") + ";"


def _enumerate_nested(n: int) -> list:
    if not 3 <= n <= MAX_ENUMERATION_N:
        raise ValueError(f"n must be in [3, {MAX_ENUMERATION_N}], got {n}")
    level = [(1, 2)]
    for x in range(3, n + 1):
        level = [t for prev in level for t in _insert_everywhere(prev, x)]
    return level


def enumerate_all_keys(n: int) -> list[str]:
    """Canonical Newick keys of all (2n-3)!! rooted binary trees on labels 1..n."""
    return [_nested_key(t) for t in _enumerate_nested(n)]


def enumerate_all_trees(n: int) -> list[Tree]:
    """All (2n-3)!! trees, built by inserting leaf x into every edge of each (x-1)-leaf tree."""
    return [Tree.from_nested(t) for t in _enumerate_nested(n)]


@dataclass
class RsprGraph:
    """Induced subgraph of the rSPR graph on a set of trees.

    ``adjacency[i]`` is the sorted list of neighbors of vertex ``i``.
    """

    vertices: list[str]
    index_of: dict[str, int]
    adjacency: list[list[int]]
    n: int
    _csr: sparse.csr_matrix | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def edge_count(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def edges(self) -> Iterable[tuple[int, int]]:
        for i, nbrs in enumerate(self.adjacency):
            for j in nbrs:
                if i < j:
                    yield i, j

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    def tree(self, i: int) -> Tree:
        return parse_newick(self.vertices[i])

    def csr(self) -> sparse.csr_matrix:
        if self._csr is None:
            m = len(self.vertices)
            indptr = np.zeros(m + 1, dtype=np.int64)
            indptr[1:] = np.cumsum([len(a) for a in self.adjacency])
            indices = np.fromiter((j for a in self.adjacency for j in a), dtype=np.int32, count=int(indptr[-1]))
            data = np.ones(len(indices), dtype=np.int8)
            self._csr = sparse.csr_matrix((data, indices, indptr), shape=(m, m))
        return self._csr


def build_graph(trees: Sequence[Tree | str]) -> RsprGraph:
    """Induced rSPR graph on ``trees`` by enumerating each tree's neighbors.

    Each new vertex is linked to every already-indexed neighbor, so every edge
    is discovered once, from its later endpoint.  O(m n^3) overall.
    """
    vertices: list[str] = []
    index_of: dict[str, int] = {}
    adjacency: list[list[int]] = []
    n = None
    for item in trees:
        t = parse_newick(item) if isinstance(item, str) else item
        t = canonicalize(t)
        if n is None:
            n = t.n
        elif t.n != n:
            raise ValueError(f"mixed leaf counts: {n} and {t.n}")
        key = t.key
        if key in index_of:
            raise ValueError(f"duplicate input tree {key}")
        i = len(vertices)
        vertices.append(key)
        index_of[key] = i
        adjacency.append([])
        if n >= 3:
            for nk in neighbor_keys(t):
                j = index_of.get(nk)
                if j is not None:
                    adjacency[i].append(j)
                    adjacency[j].append(i)
    for a in adjacency:
        a.sort()
    return RsprGraph(vertices, index_of, adjacency, n or 0)


def build_full_graph(n: int) -> RsprGraph:
    return build_graph(enumerate_all_trees(n))


# -- distances ----------------------------------------------------------------


@dataclass(frozen=True)
class DistanceTable:
    """BFS distances from ``source``; ``UNREACHED`` beyond the cap or component."""

    source: int
    dist: np.ndarray

    def __getitem__(self, v: int) -> float:
        d = int(self.dist[v])
        return math.inf if d == UNREACHED else d


def bfs_distances(graph: RsprGraph, source: int, cap: int | None = None) -> DistanceTable:
    dist = np.full(len(graph), UNREACHED, dtype=np.int32)
    dist[source] = 0
    frontier = [source]
    d = 0
    adj = graph.adjacency
    while frontier and (cap is None or d < cap):
        d += 1
        nxt = []
        for x in frontier:
            for y in adj[x]:
                if dist[y] == UNREACHED:
                    dist[y] = d
                    nxt.append(y)
        frontier = nxt
    return DistanceTable(source, dist)


def diameter(graph: RsprGraph, sources: Iterable[int] | None = None) -> int:
    """Maximum BFS eccentricity over ``sources`` (all vertices by default).

    Restricting ``sources`` is exact when every vertex is the image of some
    source under a graph automorphism, e.g. one tree per unlabeled shape.
    """
    if len(graph) <= 1:
        return 0
    idx = None if sources is None else np.fromiter(sources, dtype=np.int64)
    dist = csgraph.shortest_path(graph.csr(), unweighted=True, directed=False, indices=idx)
    if np.isinf(dist).any():
        raise ValueError("graph is disconnected")
    return int(dist.max())


@lru_cache(maxsize=300_000)
def cached_neighbor_keys(key: str) -> tuple[str, ...]:
    return tuple(neighbor_keys(parse_newick(key)))


def distance_on_the_fly(t1: Tree | str, t2: Tree | str, cap: int) -> int | None:
    """rSPR distance by bidirectional BFS over generated neighbors; None if > cap."""
    k1 = t1 if isinstance(t1, str) else canonicalize(t1).key
    k2 = t2 if isinstance(t2, str) else canonicalize(t2).key
    if k1 == k2:
        return 0
    seen = ({k1: 0}, {k2: 0})
    fronts = ([k1], [k2])
    radius = [0, 0]
    while radius[0] + radius[1] < cap:
        side = 0 if len(fronts[0]) <= len(fronts[1]) else 1
        mine, other = seen[side], seen[1 - side]
        radius[side] += 1
        nxt = []
        best = None
        for x in fronts[side]:
            for y in cached_neighbor_keys(x):
                if y in mine:
                    continue
                mine[y] = radius[side]
                nxt.append(y)
                if y in other:
                    d = radius[side] + other[y]
                    if best is None or d < best:
                        best = d
        if best is not None:
            return best if best <= cap else None
        if not nxt:
            return None
        fronts = (nxt, fronts[1]) if side == 0 else (fronts[0], nxt)
    return None


class GraphDistances:
    """Distance matrices between vertex sets of a materialized graph.

    Small graphs use an all-pairs BFS table.  Larger ones run one BFS per
    row vertex and keep the rows; curvature work reuses the same rows heavily
    because every class representative starts from a shape-canonical tree.
    """

    def __init__(self, graph: RsprGraph, table_limit: int = 2500, row_cache: int = 8000):
        self.graph = graph
        self._table = None
        self._rows: dict[int, np.ndarray] = {}
        self._row_cache = row_cache
        if len(graph) <= table_limit:
            d = csgraph.shortest_path(graph.csr(), unweighted=True, directed=False)
            d[np.isinf(d)] = UNREACHED
            self._table = d.astype(np.int16)

    def index(self, keys: Sequence[str]) -> np.ndarray:
        return np.fromiter((self.graph.index_of[k] for k in keys), dtype=np.int64, count=len(keys))

    def rows(self, ri: np.ndarray) -> np.ndarray:
        """Full distance rows (UNREACHED where disconnected) for vertex ids ``ri``."""
        if self._table is not None:
            return self._table[ri]
        missing = sorted({int(i) for i in ri} - self._rows.keys())
        if missing:
            if len(self._rows) + len(missing) > self._row_cache:
                self._rows.clear()
            d = csgraph.shortest_path(self.graph.csr(), unweighted=True, directed=False, indices=missing)
            d = np.atleast_2d(d)
            d[np.isinf(d)] = UNREACHED
            for i, row in zip(missing, d.astype(np.int16)):
                self._rows[i] = row
        return np.stack([self._rows[int(i)] for i in ri])

    def pair(self, k1: str, k2: str, cap: int | None = None) -> int:
        i, j = self.graph.index_of[k1], self.graph.index_of[k2]
        return int(self.rows(np.array([i]))[0, j])

    def matrix(self, rows: Sequence[str], cols: Sequence[str], cap: int) -> np.ndarray:
        """Integer distances, with ``cap + 1`` for pairs farther than ``cap``."""
        ri, ci = self.index(rows), self.index(cols)
        out = self.rows(ri)[:, ci].astype(np.int64)
        out[(out == UNREACHED) | (out > cap)] = cap + 1
        return out


class TreeDistances:
    """Distance matrices computed without a materialized graph (cached neighbor BFS)."""

    def pair(self, k1: str, k2: str, cap: int) -> int:
        d = distance_on_the_fly(k1, k2, cap)
        return cap + 1 if d is None else d

    def matrix(self, rows: Sequence[str], cols: Sequence[str], cap: int) -> np.ndarray:
        half_r, half_c = (cap + 1) // 2, cap // 2
        rball = [_key_ball(k, half_r) for k in rows]
        cball = [_key_ball(k, half_c) for k in cols]
        out = np.full((len(rows), len(cols)), cap + 1, dtype=np.int64)
        for a, ra in enumerate(rball):
            for b, cb in enumerate(cball):
                small, big = (ra, cb) if len(ra) <= len(cb) else (cb, ra)
                best = cap + 1
                for y, dy in small.items():
                    dz = big.get(y)
                    if dz is not None and dy + dz < best:
                        best = dy + dz
                out[a, b] = best
        return out


def _key_ball(key: str, radius: int) -> dict[str, int]:
    seen = {key: 0}
    frontier = [key]
    for r in range(1, radius + 1):
        nxt = []
        for x in frontier:
            for y in cached_neighbor_keys(x):
                if y not in seen:
                    seen[y] = r
                    nxt.append(y)
        frontier = nxt
    return seen


# -- edge-list files ------------------------------------------------------------


def write_edge_list(graph: RsprGraph, edges: TextIO, vertices: TextIO, header: Sequence[str] = ()) -> None:
    """Edge list ``n m_vertices m_edges`` then ``i j`` (i < j), plus ``index newick`` sidecar."""
    for line in header:
        edges.write(f"# {line}\n")
        vertices.write(f"# {line}\n")
    edges.write(f"{graph.n} {len(graph)} {graph.edge_count}\n")
    for i, j in graph.edges():
        edges.write(f"{i} {j}\n")
    for i, key in enumerate(graph.vertices):
        vertices.write(f"{i} {key}\n")


def read_edge_list(edges: TextIO, vertices: TextIO) -> RsprGraph:
    lines = [ln for ln in edges if ln.strip() and not ln.startswith("#")]
    n, m, e = (int(x) for x in lines[0].split())
    keys = [""] * m
    for ln in vertices:
        if ln.startswith("#") or not ln.strip():
            continue
        i, key = ln.split()
        keys[int(i)] = key
    adjacency: list[list[int]] = [[] for _ in range(m)]
    for ln in lines[1:]:
        i, j = (int(x) for x in ln.split())
        adjacency[i].append(j)
        adjacency[j].append(i)
    if sum(len(a) for a in adjacency) != 2 * e:
        raise ValueError("edge count in header does not match body")
    for a in adjacency:
        a.sort()
    return RsprGraph(keys, {k: i for i, k in enumerate(keys)}, adjacency, n)
