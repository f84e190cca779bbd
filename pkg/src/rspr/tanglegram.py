"""Equivalence classes of ordered tree pairs under simultaneous leaf relabeling.

The canonical form of a pair (T1, T2) is ``(M, min_a key(a T2))`` where M is
T1's shape labelled 1..n along a fixed structural leaf order, and ``a`` ranges
over every relabeling sending T1 to M (a coset of T1's automorphism group).
Two pairs are equivalent iff their canonical forms coincide, and the number
of relabelings attaining the minimum is the pair's stabilizer size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .tree import Tree, canonicalize, parse_newick

__all__ = [
    "PairClass",
    "shape_code",
    "shape_labelings",
    "shape_key",
    "relabeled_key",
    "canonical_pair",
    "enumerate_classes",
    "shape_representatives",
    "classes_from_shapes",
]


@dataclass(frozen=True)
class PairClass:
    """Canonical pair, a relabeling witnessing it, and the orbit size over all label permutations."""

    canonical_key: str
    key1: str
    key2: str
    witness_perm: tuple[tuple[int, int], ...]
    class_size: int

    @property
    def tree1(self) -> Tree:
        return parse_newick(self.key1)

    @property
    def tree2(self) -> Tree:
        return parse_newick(self.key2)


def shape_code(tree: Tree) -> list[str]:
    """Per-node unlabeled shape code; equal codes iff isomorphic unlabeled subtrees."""
    m = tree.node_count
    code = [""] * m
    for v in range(m - 1, -1, -1):
        a = tree.left[v]
        if a < 0:
            code[v] = "x"
        else:
            ca, cb = code[a], code[tree.right[v]]
            code[v] = "(" + ca + cb + ")" if ca <= cb else "(" + cb + ca + ")"
    return code


def shape_labelings(tree: Tree) -> list[dict[int, int]]:
    """All relabelings mapping ``tree`` onto its shape-canonical labelled form.

    Children are visited in shape-code order; swapping identically shaped
    siblings gives the alternatives, one per automorphism.
    """
    code = shape_code(tree)

    def orders(v: int) -> list[list[int]]:
        a = tree.left[v]
        if a < 0:
            return [[tree.label[v]]]
        b = tree.right[v]
        if code[b] < code[a]:
            a, b = b, a
        oa, ob = orders(a), orders(b)
        out = [x + y for x in oa for y in ob]
        if code[a] == code[b]:
            out += [y + x for x in oa for y in ob]
        return out

    return [{lab: pos + 1 for pos, lab in enumerate(order)} for order in orders(0)]


def relabeled_key(tree: Tree, mapping) -> str:
    """Canonical key of ``tree`` with labels sent through ``mapping``."""
    m = tree.node_count
    lft, rgt = tree.left, tree.right
    sub = [""] * m
    mins = [0] * m
    for v in range(m - 1, -1, -1):
        a = lft[v]
        if a < 0:
            x = mapping[tree.label[v]]
            sub[v] = str(x)
            mins[v] = x
        else:
            b = rgt[v]
            if mins[a] < mins[b]:
                sub[v] = "(" + sub[a] + "," + sub[b] + ")"
                mins[v] = mins[a]
            else:
                sub[v] = "(" + sub[b] + "," + sub[a] + ")"
                mins[v] = mins[b]
    return sub[0] + ";"


def shape_key(tree: Tree) -> str:
    """Canonical key of the shape-canonical labelled form of ``tree``."""
    return relabeled_key(tree, shape_labelings(tree)[0])


def _check_labels(t1: Tree, t2: Tree) -> None:
    if t1.labels() != t2.labels():
        raise ValueError("trees have different label sets")


def canonical_pair(t1: Tree | str, t2: Tree | str) -> PairClass:
    t1 = parse_newick(t1) if isinstance(t1, str) else canonicalize(t1)
    t2 = parse_newick(t2) if isinstance(t2, str) else canonicalize(t2)
    _check_labels(t1, t2)
    maps = shape_labelings(t1)
    k1 = relabeled_key(t1, maps[0])
    best, witness, ties = None, None, 0
    for mp in maps:
        k2 = relabeled_key(t2, mp)
        if best is None or k2 < best:
            best, witness, ties = k2, mp, 1
        elif k2 == best:
            ties += 1
    return PairClass(
        canonical_key=k1 + best,
        key1=k1,
        key2=best,
        witness_perm=tuple(sorted(witness.items())),
        class_size=math.factorial(t1.n) // ties,
    )


@dataclass
class ClassEntry:
    representative: PairClass
    class_size: int


def enumerate_classes(pairs: Iterable[tuple[Tree | str, Tree | str]]) -> dict[str, ClassEntry]:
    """Partition ordered pairs into classes; sizes count members among ``pairs``."""
    out: dict[str, ClassEntry] = {}
    for t1, t2 in pairs:
        pc = canonical_pair(t1, t2)
        entry = out.get(pc.canonical_key)
        if entry is None:
            out[pc.canonical_key] = ClassEntry(pc, 1)
        else:
            entry.class_size += 1
    return dict(sorted(out.items()))


def shape_representatives(keys: Iterable[str]) -> list[str]:
    """Sorted shape-canonical keys, one per unlabeled shape among ``keys``."""
    return sorted({shape_key(parse_newick(k)) for k in keys})


def classes_from_shapes(
    shapes: Sequence[str],
    partners,
) -> dict[str, PairClass]:
    """Every class of ordered pairs whose first tree has one of ``shapes``.

    ``partners(shape_key)`` yields candidate second trees (keys); with all
    trees (or all neighbors) as partners this covers every ordered pair (or
    every adjacent ordered pair) exactly once per class.  Class sizes are full
    orbit sizes n!/|stabilizer|.
    """
    out: dict[str, PairClass] = {}
    for k1 in shapes:
        t1 = parse_newick(k1)
        maps = shape_labelings(t1)
        nfact = math.factorial(t1.n)
        for k2 in partners(k1):
            t2 = parse_newick(k2)
            best, witness, ties = None, None, 0
            for mp in maps:
                key = relabeled_key(t2, mp)
                if best is None or key < best:
                    best, witness, ties = key, mp, 1
                elif key == best:
                    ties += 1
            ck = k1 + best
            if ck not in out:
                out[ck] = PairClass(ck, k1, best, tuple(sorted(witness.items())), nfact // ties)
    return dict(sorted(out.items()))
