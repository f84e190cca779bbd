"""Rooted subtree-prune-regraft moves and rSPR neighborhoods.

A move is a pair ``(source, dest)`` of node ids of a canonical tree: the
subtree rooted at ``source`` is pruned and regrafted onto the edge above
``dest``.  ``dest == 0`` (the root node) denotes the root edge to rho.

Moves that produce the input tree or duplicate another move are excluded per
node, so each remaining (source, dest) pair yields a distinct neighbor:

* sibling edge and parent edge (same tree),
* grandparent edge (same as moving the aunt onto the sibling edge),
* aunt edge (same as moving the aunt onto the source's own edge).

Moves are totally ordered by source in preorder, then destination in
preorder with the root edge last, so all moves of one subtree are contiguous.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .tree import Tree, canonicalize, lca

__all__ = [
    "SprMove",
    "MoveGeometry",
    "InvalidMove",
    "excluded_destinations",
    "is_valid_move",
    "move_geometry",
    "apply_spr",
    "inverse_move",
    "neighbor_block_size",
    "degree",
    "degree_extremes",
    "iter_moves",
    "neighbor_keys",
    "enumerate_neighbors",
    "select_uniform_neighbor",
    "select_uniform_move",
    "predict_degree_delta",
    "square_overlap",
    "shared_neighbors",
    "find_move",
]


class InvalidMove(ValueError):
    """The (source, dest) pair is not a permitted rSPR move."""


@dataclass(frozen=True)
class SprMove:
    source: int
    dest: int

    def is_root_edge(self) -> bool:
        return self.dest == 0


@dataclass(frozen=True)
class MoveGeometry:
    """Quantities of a move used by the degree-change identity.

    ``k`` leaves and ``x`` nodes in the moved subtree R; ``i`` leaves of its
    old sibling U; ``j`` leaves of the destination subtree V minus those of R;
    ``a`` and ``b`` intermediate nodes from R's parent and from V to
    ``lca`` (node id, -1 for rho).  When V lies inside U the lca is R's
    parent itself and ``a`` is 0.
    """

    k: int
    x: int
    a: int
    b: int
    i: int
    j: int
    lca: int


def _canon(tree: Tree) -> Tree:
    return tree if tree.is_canonical() else canonicalize(tree)


def excluded_destinations(tree: Tree, u: int) -> set[int]:
    """Destinations outside R that do not yield a new distinct neighbor."""
    p = tree.parent[u]
    if p < 0:
        return set()
    out = {p, tree.sibling(u)}
    g = tree.parent[p]
    if g >= 0:
        out.add(g)
        out.add(tree.sibling(p))
    return out


def is_valid_move(tree: Tree, move: SprMove) -> bool:
    u, v = move.source, move.dest
    m = tree.node_count
    if not (0 < u < m and 0 <= v < m):
        return False
    if tree.in_subtree(v, u):
        return False
    return v not in excluded_destinations(tree, u)


def _check(tree: Tree, move: SprMove) -> None:
    u, v = move.source, move.dest
    m = tree.node_count
    if not (0 <= u < m and 0 <= v < m):
        raise InvalidMove(f"node ids out of range in {move}")
    if u == 0:
        raise InvalidMove("the root subtree cannot be moved")
    if tree.in_subtree(v, u):
        raise InvalidMove(f"destination {v} lies inside the pruned subtree")
    p = tree.parent[u]
    g = tree.parent[p]
    if v == tree.sibling(u):
        raise InvalidMove("regrafting onto the sibling edge yields the same tree")
    if v == p:
        raise InvalidMove("regrafting onto the parent edge yields the same tree")
    if g >= 0 and v == g:
        raise InvalidMove("grandparent edge duplicates moving the aunt onto the sibling edge")
    if g >= 0 and v == tree.sibling(p):
        raise InvalidMove("aunt edge duplicates moving the aunt onto this subtree's edge")


def neighbor_block_size(tree: Tree, u: int) -> int:
    """Number of neighbors assigned to node ``u`` (moves of the subtree at ``u``)."""
    d = tree.depth[u]
    if d <= 0:
        return 0
    m = tree.node_count
    if d == 1:
        return m - tree.size[u] - 2
    return m - tree.size[u] - 4


def degree(tree: Tree) -> int:
    """Number of distinct rSPR neighbors, by summing per-node block sizes."""
    if tree.n < 3:
        raise ValueError(f"degree is degenerate for n={tree.n} < 3")
    m = tree.node_count
    size, depth = tree.size, tree.depth
    total = 0
    for u in range(1, m):
        total += m - size[u] - (2 if depth[u] == 1 else 4)
    return total


def degree_extremes(n: int, shape: str) -> int:
    """Closed-form degree of the ladder (minimum) or balanced (maximum) tree."""
    if n < 3:
        raise ValueError("n must be at least 3")
    if shape == "ladder":
        return 3 * n * n - 13 * n + 14
    if shape == "balanced":
        # floor(log2(m + 1)) == (m + 1).bit_length() - 1
        return 4 * (n - 2) ** 2 - 2 * sum((m + 1).bit_length() - 1 for m in range(1, n - 1))
    raise ValueError(f"unknown shape {shape!r}")


def _destinations(tree: Tree, u: int) -> Iterator[int]:
    m = tree.node_count
    end = u + tree.size[u]
    bad = excluded_destinations(tree, u)
    for v in range(1, m):
        if u <= v < end or v in bad:
            continue
        yield v
    if 0 not in bad:
        yield 0


def iter_moves(tree: Tree) -> Iterator[SprMove]:
    """All neighbor-producing moves of a canonical tree in the fixed total order."""
    for u in range(1, tree.node_count):
        for v in _destinations(tree, u):
            yield SprMove(u, v)


def _move_key(tree: Tree, u: int, v: int) -> str:
    sub = tree.subkeys()
    minl = tree.min_label
    size = tree.size
    lft, rgt = tree.left, tree.right
    p = tree.parent[u]
    s = rgt[p] if lft[p] == u else lft[p]
    su, mu = sub[u], minl[u]

    def w(x):
        if x == p:
            return w(s)
        # x changes if it is an ancestor of p or a proper ancestor of v
        if x <= p < x + size[x] or x < v < x + size[x]:
            ka, ma = w(lft[x])
            kb, mb = w(rgt[x])
            if ma < mb:
                res = "(" + ka + "," + kb + ")", ma
            else:
                res = "(" + kb + "," + ka + ")", mb
        else:
            res = sub[x], minl[x]
        if x == v:
            kv, mv = res
            if mv < mu:
                return "(" + kv + "," + su + ")", mv
            return "(" + su + "," + kv + ")", mu
        return res

    return w(0)[0] + ";"


def _move_nested(tree: Tree, u: int, v: int):
    lft, rgt = tree.left, tree.right
    p = tree.parent[u]
    s = rgt[p] if lft[p] == u else lft[p]
    ru = tree.to_nested(u)

    def w(x):
        if x == p:
            return w(s)
        if lft[x] < 0:
            res = tree.label[x]
        elif tree.in_subtree(p, x) or tree.in_subtree(v, x):
            res = (w(lft[x]), w(rgt[x]))
        else:
            res = tree.to_nested(x)
        if x == v:
            return (res, ru)
        return res

    return w(0)


def apply_spr(tree: Tree, move: SprMove) -> Tree:
    """Apply a move to a canonical tree and return the canonical neighbor."""
    tree = _canon(tree)
    _check(tree, move)
    return canonicalize(Tree.from_nested(_move_nested(tree, move.source, move.dest)))


def find_move(tree: Tree, target: Tree) -> SprMove | None:
    """The unique ordered move of ``tree`` producing ``target``, or None."""
    tree = _canon(tree)
    key = target.key
    for mv in iter_moves(tree):
        if _move_key(tree, mv.source, mv.dest) == key:
            return mv
    return None


def inverse_move(tree: Tree, move: SprMove) -> tuple[Tree, SprMove]:
    """Return ``(S, back)`` where S = apply_spr(tree, move) and ``back`` maps S to tree.

    ``back`` moves the same subtree; when the forward move is an excluded
    duplicate in S's own ordering, the equivalent canonical move is returned.
    """
    tree = _canon(tree)
    nb = apply_spr(tree, move)
    back = find_move(nb, tree)
    if back is None:  # pragma: no cover - would contradict adjacency symmetry
        raise AssertionError("rSPR adjacency is not symmetric")
    return nb, back


def neighbor_keys(tree: Tree) -> list[str]:
    """Canonical keys of all neighbors, in move order."""
    tree = _canon(tree)
    out = []
    for u in range(1, tree.node_count):
        for v in _destinations(tree, u):
            out.append(_move_key(tree, u, v))
    return out


def enumerate_neighbors(tree: Tree) -> list[tuple[SprMove, Tree]]:
    """All ``degree(tree)`` distinct neighbors with the move producing each.

    Duplicates would indicate a wrong exclusion rule and raise AssertionError.
    """
    tree = _canon(tree)
    out = []
    seen = {tree.key}
    for mv in iter_moves(tree):
        nb = canonicalize(Tree.from_nested(_move_nested(tree, mv.source, mv.dest)))
        if nb.key in seen:
            raise AssertionError(f"duplicate neighbor {nb.key} from {mv}")
        seen.add(nb.key)
        out.append((mv, nb))
    return out


def select_uniform_move(tree: Tree, r: int) -> SprMove:
    """The r-th move (1-based) in the fixed order, found in O(n)."""
    tree = _canon(tree)
    deg = degree(tree)
    if not 1 <= r <= deg:
        raise ValueError(f"r={r} outside [1, {deg}]")
    for u in range(1, tree.node_count):
        c = neighbor_block_size(tree, u)
        if r > c:
            r -= c
            continue
        for v in _destinations(tree, u):
            r -= 1
            if r == 0:
                return SprMove(u, v)
    raise AssertionError("block sizes disagree with destination scan")  # pragma: no cover


def select_uniform_neighbor(tree: Tree, r: int) -> Tree:
    """The r-th neighbor (1-based); a uniform r gives a uniform neighbor."""
    tree = _canon(tree)
    mv = select_uniform_move(tree, r)
    return canonicalize(Tree.from_nested(_move_nested(tree, mv.source, mv.dest)))


def move_geometry(tree: Tree, move: SprMove) -> MoveGeometry:
    tree = _canon(tree)
    _check(tree, move)
    u, v = move.source, move.dest
    p = tree.parent[u]
    s = tree.sibling(u)
    k = tree.leaf_count(u)
    i = tree.leaf_count(s)
    j = tree.leaf_count(v) - (k if tree.in_subtree(u, v) else 0)
    pv = tree.parent[v]
    if pv < 0:
        L, dL = -1, -1
    else:
        L = lca(tree, p, pv)
        dL = tree.depth[L]
    a = max(tree.depth[p] - dL - 1, 0)
    b = tree.depth[v] - dL - 1
    return MoveGeometry(k=k, x=tree.size[u], a=a, b=b, i=i, j=j, lca=L)


def predict_degree_delta(tree: Tree, move: SprMove) -> int:
    """deg(T) - deg(S) for S = apply_spr(T, move), from the move geometry alone."""
    g = move_geometry(tree, move)
    return -2 * (g.k * (g.a - g.b) + g.i - g.j)


def square_overlap(tree: Tree, move: SprMove, deg_t: int | None = None) -> int:
    """Lower bound on disjoint distance-1 neighbor pairs across the edge (T, S)."""
    g = move_geometry(tree, move)
    if deg_t is None:
        deg_t = degree(tree)
    return deg_t - 2 * g.k * g.b - 2 * (g.j - 1)


def square_overlap_other_side(tree: Tree, move: SprMove, deg_s: int) -> int:
    """The same overlap expressed through S's degree: deg(S) - 2ka - 2(i-1)."""
    g = move_geometry(tree, move)
    return deg_s - 2 * g.k * g.a - 2 * (g.i - 1)


def shared_neighbors(t1: Tree, t2: Tree) -> set[str]:
    """Canonical keys of N(t1) ∩ N(t2)."""
    if t1.labels() != t2.labels():
        raise ValueError("trees have different label sets")
    return set(neighbor_keys(t1)) & set(neighbor_keys(t2))
