"""Coarse, lazy and asymptotic Ricci-Ollivier curvature of rSPR graphs.

kappa(T, S) = 1 - W1(m_T, m_S) / d(T, S), with m the one-step measure of a
uniform or Metropolis-Hastings walk.  All values are exact Fractions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .graph import GraphDistances, RsprGraph, TreeDistances, cached_neighbor_keys, distance_on_the_fly
from .parallel import parallel_map, shared
from .tanglegram import PairClass, canonical_pair, classes_from_shapes, shape_representatives
from .transport import w1
from .tree import Tree, canonicalize, ladder, parse_newick
from .walks import MH, UNIFORM, Measure, WalkKind, degree_of, step_measure, walk_rng

__all__ = [
    "CurvatureError",
    "CurvatureRecord",
    "CurvatureContext",
    "kappa",
    "kappa_lazy",
    "ric",
    "ric_with_p",
    "compute_record",
    "lower_bound_pair",
    "tight_adjacent_pair",
    "leaf_to_root_pair",
    "max_adjacent_bound",
    "adjacent_lower_bound",
    "select_classes",
    "compute_records",
    "shape_diameter",
]

RIC_START = Fraction(1, 8)
RIC_MAX_HALVINGS = 10


class CurvatureError(ArithmeticError):
    pass


@dataclass(frozen=True)
class CurvatureRecord:
    class_key: str
    key1: str
    key2: str
    distance: int
    deg1: int
    deg2: int
    kappa: Fraction
    kappa_mh: Fraction
    ric: Fraction
    ric_mh: Fraction
    p_used: Fraction
    class_size: int = 1


class CurvatureContext:
    """Distance oracle plus measure cache shared by many curvature evaluations.

    With a materialized graph, distances come from graph BFS; otherwise
    neighborhoods are generated on the fly and searched with a bounded
    bidirectional BFS.
    """

    def __init__(self, graph: RsprGraph | None = None):
        self.graph = graph
        self.oracle = GraphDistances(graph) if graph is not None else TreeDistances()
        self._measures: dict[tuple[str, WalkKind], Measure] = {}

    def distance(self, k1: str, k2: str) -> int:
        if self.graph is not None:
            return self.oracle.pair(k1, k2)
        n = parse_newick(k1).n
        d = distance_on_the_fly(k1, k2, cap=n)
        if d is None:  # pragma: no cover - rSPR distance is below n
            raise CurvatureError("distance exceeds n; trees on different label sets?")
        return d

    def measure(self, key: str, kind: WalkKind) -> Measure:
        m = self._measures.get((key, kind))
        if m is None:
            m = self._measures[(key, kind)] = step_measure(key, kind)
        return m

    def transport_cost(self, k1: str, k2: str, kind: WalkKind, d: int) -> Fraction:
        plan = w1(self.measure(k1, kind), self.measure(k2, kind), self.oracle, cap=d + 2)
        return plan.cost


def _keys(t1: Tree | str, t2: Tree | str) -> tuple[str, str]:
    k1 = t1 if isinstance(t1, str) else canonicalize(t1).key
    k2 = t2 if isinstance(t2, str) else canonicalize(t2).key
    if isinstance(t1, str):
        k1 = parse_newick(k1).key
    if isinstance(t2, str):
        k2 = parse_newick(k2).key
    if k1 == k2:
        raise ValueError("curvature is undefined for identical trees (distance 0)")
    return k1, k2


def _kappa(ctx: CurvatureContext, k1: str, k2: str, kind: WalkKind, d: int) -> Fraction:
    return 1 - ctx.transport_cost(k1, k2, kind, d) / d


def kappa(t1, t2, kind: WalkKind = UNIFORM, ctx: CurvatureContext | None = None) -> Fraction:
    ctx = ctx or CurvatureContext()
    k1, k2 = _keys(t1, t2)
    return _kappa(ctx, k1, k2, kind, ctx.distance(k1, k2))


def kappa_lazy(t1, t2, p, kind: WalkKind = UNIFORM, ctx: CurvatureContext | None = None) -> Fraction:
    return kappa(t1, t2, kind.lazy(p), ctx)


def _ric(ctx: CurvatureContext, k1: str, k2: str, kind: WalkKind, d: int) -> tuple[Fraction, Fraction]:
    p = RIC_START
    prev = _kappa(ctx, k1, k2, kind.lazy(p), d) / p
    for _ in range(RIC_MAX_HALVINGS):
        p /= 2
        cur = _kappa(ctx, k1, k2, kind.lazy(p), d) / p
        if cur == prev:
            return cur, p
        prev = cur
    raise CurvatureError(f"kappa_p/p did not stabilize down to p={p} for {k1} {k2}")


def ric_with_p(t1, t2, kind: WalkKind = UNIFORM, ctx: CurvatureContext | None = None) -> tuple[Fraction, Fraction]:
    """Asymptotic curvature and the p at which kappa_p/p stabilized."""
    ctx = ctx or CurvatureContext()
    k1, k2 = _keys(t1, t2)
    return _ric(ctx, k1, k2, kind.lazy(1), ctx.distance(k1, k2))


def ric(t1, t2, kind: WalkKind = UNIFORM, ctx: CurvatureContext | None = None) -> Fraction:
    return ric_with_p(t1, t2, kind, ctx)[0]


def compute_record(
    pair: PairClass | tuple[str, str],
    ctx: CurvatureContext,
    with_ric: bool = True,
) -> CurvatureRecord:
    """Uniform and MH curvature (and optionally ric) for one representative pair."""
    if isinstance(pair, PairClass):
        k1, k2, ck, size = pair.key1, pair.key2, pair.canonical_key, pair.class_size
    else:
        k1, k2 = _keys(*pair)
        ck, size = k1 + k2, 1
    d = ctx.distance(k1, k2)
    if d <= 0:
        raise ValueError("curvature is undefined for identical trees (distance 0)")
    ku = _kappa(ctx, k1, k2, UNIFORM, d)
    km = _kappa(ctx, k1, k2, MH, d)
    if with_ric:
        ru, p_used = _ric(ctx, k1, k2, UNIFORM, d)
        rm, _ = _ric(ctx, k1, k2, MH, d)
    else:
        ru, rm, p_used = ku, km, Fraction(1)
    return CurvatureRecord(ck, k1, k2, d, degree_of(k1), degree_of(k2), ku, km, ru, rm, p_used, size)


# -- closed forms and named constructions ----------------------------------------


def max_adjacent_bound(n: int) -> Fraction:
    """Largest curvature an adjacent pair can have: (6n-17)/(3n^2-13n+14)."""
    return Fraction(6 * n - 17, 3 * n * n - 13 * n + 14)


def adjacent_lower_bound(n: int) -> Fraction:
    """Lower bound on adjacent curvature: (-n^2+2n)/(3.5n^2-15n+16)."""
    return Fraction(-2 * n * n + 4 * n, 7 * n * n - 30 * n + 32)


def tight_adjacent_pair(n: int) -> tuple[Tree, Tree]:
    """Two ladders differing only in the arrangement of the three deepest leaves."""
    nested = ((1, 3), 2)
    for x in range(4, n + 1):
        nested = (nested, x)
    return ladder(n), canonicalize(Tree.from_nested(nested))


def lower_bound_pair(n: int) -> tuple[Tree, Tree]:
    """The ladder S and the tree T made by moving its lower floor(n/2) leaves to the root.

    Returns ``(T, S)``.
    """
    if n < 4:
        raise ValueError("n must be at least 4")
    h = n // 2
    low = 1
    for x in range(2, h + 1):
        low = (low, x)
    rest = h + 1
    for x in range(h + 2, n + 1):
        rest = (rest, x)
    t = canonicalize(Tree.from_nested((low, rest)))
    return t, ladder(n)


def leaf_to_root_pair(n: int) -> tuple[Tree, Tree]:
    """Ladder T and S = T with its deepest leaf regrafted on the root edge (a fixed k=1 move)."""
    if n < 3:
        raise ValueError("n must be at least 3")
    rest = 2
    for x in range(3, n + 1):
        rest = (rest, x)
    return ladder(n), canonicalize(Tree.from_nested((1, rest)))


# -- class selection and batch evaluation -----------------------------------------


def shape_diameter(graph: RsprGraph, ctx: CurvatureContext | None = None) -> int:
    """Graph diameter from BFS at one tree per shape (relabeling is an automorphism)."""
    ctx = ctx or CurvatureContext(graph)
    shapes = shape_representatives(graph.vertices)
    rows = ctx.oracle.rows(ctx.oracle.index(shapes))
    if (rows < 0).any():
        raise ValueError("graph is disconnected")
    return int(rows.max())


def select_classes(
    graph: RsprGraph,
    mode: str,
    ctx: CurvatureContext | None = None,
    per_distance: int = 50,
    seed: int = 0,
) -> list[PairClass]:
    """Off-diagonal pair classes of a complete graph, sorted by canonical key.

    ``all`` lists every class, ``adjacent`` every class at distance 1, and
    ``sample`` adds to the adjacent classes up to ``per_distance`` classes at
    each larger distance, drawn by picking a shape and then a tree at that
    distance uniformly at random.
    """
    shapes = shape_representatives(graph.vertices)
    if mode == "all":
        out = classes_from_shapes(shapes, lambda k: graph.vertices)
        return [pc for pc in out.values() if pc.key1 != pc.key2]
    if mode not in ("adjacent", "sample"):
        raise ValueError(f"unknown pair mode {mode!r}")
    out = classes_from_shapes(shapes, cached_neighbor_keys)
    if mode == "sample":
        ctx = ctx or CurvatureContext(graph)
        rows = ctx.oracle.rows(ctx.oracle.index(shapes))
        for d in range(2, int(rows.max()) + 1):
            rng = walk_rng(seed, "sample-classes", str(graph.n), str(d))
            at = [np.flatnonzero(row == d) for row in rows]
            found: dict[str, PairClass] = {}
            attempts = 0
            while len(found) < per_distance and attempts < 40 * per_distance:
                attempts += 1
                s = int(rng.integers(len(shapes)))
                if len(at[s]) == 0:
                    continue
                j = int(at[s][rng.integers(len(at[s]))])
                pc = canonical_pair(shapes[s], graph.vertices[j])
                found.setdefault(pc.canonical_key, pc)
            out.update(found)
    return [out[k] for k in sorted(out)]


def _record_worker(args):
    pc, with_ric = args
    return compute_record(pc, shared("curvature_ctx"), with_ric)


def compute_records(
    classes: Iterable[PairClass],
    ctx: CurvatureContext,
    with_ric: bool = True,
    threads: int = 1,
) -> list[CurvatureRecord]:
    items = [(pc, with_ric) for pc in classes]
    return parallel_map(_record_worker, items, threads, curvature_ctx=ctx)
