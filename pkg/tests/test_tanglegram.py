import math
import random
from collections import defaultdict

import pytest

from conftest import context, full_graph
from oracles import permutations
from rspr.curvature import kappa
from rspr.graph import enumerate_all_trees
from rspr.spr import degree, neighbor_keys
from rspr.tanglegram import canonical_pair, classes_from_shapes, enumerate_classes, relabeled_key, shape_labelings, shape_representatives
from rspr.tree import canonicalize, ladder, parse_newick


def brute_force_class(t1, t2):
    """Least pair of canonical keys over every label permutation."""
    n = t1.n
    return min((canonicalize(t1.relabel(p)).key, canonicalize(t2.relabel(p)).key) for p in permutations(n))


def test_relabeled_examples_share_a_class():
    a = canonical_pair(parse_newick("(((1,2),3),4);"), parse_newick("((1,2),(3,4));"))
    b = canonical_pair(parse_newick("(((1,4),2),3);"), parse_newick("((1,4),(2,3));"))
    assert a.canonical_key == b.canonical_key
    assert a.canonical_key == a.key1 + a.key2


def test_diagonal():
    diagonal = set()
    for t in enumerate_all_trees(5):
        pc = canonical_pair(t, t)
        assert pc.key1 == pc.key2
        diagonal.add(pc.canonical_key)
    # one diagonal class per unlabeled shape
    assert len(diagonal) == 3


def test_label_mismatch():
    with pytest.raises(ValueError):
        canonical_pair(ladder(4), ladder(5))


def test_n4_partition_matches_brute_force():
    trees = enumerate_all_trees(4)
    ours, brute = defaultdict(set), defaultdict(set)
    for a in trees:
        for b in trees:
            ours[canonical_pair(a, b).canonical_key].add((a.key, b.key))
            brute[brute_force_class(a, b)].add((a.key, b.key))
    assert sorted(map(frozenset, ours.values()), key=sorted) == sorted(map(frozenset, brute.values()), key=sorted)
    assert len(ours) == 13


def test_n4_edge_classes_match_brute_force():
    g = full_graph(4)
    pairs = [(g.vertices[i], g.vertices[j]) for i in range(len(g)) for j in g.adjacency[i]]
    ours = enumerate_classes(pairs)
    brute = defaultdict(int)
    for a, b in pairs:
        brute[brute_force_class(parse_newick(a), parse_newick(b))] += 1
    assert sorted(e.class_size for e in ours.values()) == sorted(brute.values())
    assert sum(e.class_size for e in ours.values()) == 2 * g.edge_count


def test_all_pairs_n4_sum():
    trees = enumerate_all_trees(4)
    classes = enumerate_classes((a, b) for a in trees for b in trees)
    assert sum(e.class_size for e in classes.values()) == 225
    assert list(classes) == sorted(classes)


def test_witness_and_class_size():
    rng = random.Random(4)
    trees = enumerate_all_trees(6)
    for _ in range(100):
        a, b = rng.sample(trees, 2)
        pc = canonical_pair(a, b)
        perm = dict(pc.witness_perm)
        assert relabeled_key(a, perm) == pc.key1
        assert relabeled_key(b, perm) == pc.key2
        assert math.factorial(6) % pc.class_size == 0
        # orbit size counted directly
        orbit = {(relabeled_key(a, p), relabeled_key(b, p)) for p in permutations(6)}
        assert len(orbit) == pc.class_size


def test_idempotent():
    rng = random.Random(5)
    trees = enumerate_all_trees(6)
    for _ in range(50):
        pc = canonical_pair(*rng.sample(trees, 2))
        again = canonical_pair(pc.key1, pc.key2)
        assert again.canonical_key == pc.canonical_key
        assert again.class_size == pc.class_size


def test_invariance_under_random_relabeling():
    rng = random.Random(6)
    trees = enumerate_all_trees(6)
    for _ in range(60):
        a, b = rng.sample(trees, 2)
        labels = list(range(1, 7))
        rng.shuffle(labels)
        p = {i + 1: labels[i] for i in range(6)}
        assert canonical_pair(a, b).canonical_key == canonical_pair(a.relabel(p), b.relabel(p)).canonical_key


def test_shape_labelings_count_automorphisms():
    # ((1,2),(3,4)) has 8 automorphisms; the ladder has 2
    assert len(shape_labelings(parse_newick("((1,2),(3,4));"))) == 8
    assert len(shape_labelings(ladder(6))) == 2


def test_classes_from_shapes_cover_all_pairs():
    g = full_graph(5)
    shapes = shape_representatives(g.vertices)
    assert len(shapes) == 3
    allc = classes_from_shapes(shapes, lambda k: g.vertices)
    assert len(allc) == 114
    assert sum(pc.class_size for pc in allc.values()) == 105 * 105
    adj = classes_from_shapes(shapes, lambda k: neighbor_keys(parse_newick(k)))
    assert sum(pc.class_size for pc in adj.values()) == 2 * g.edge_count
    brute = enumerate_classes((a, b) for a in g.vertices for b in g.vertices)
    assert set(brute) == set(allc)
    assert all(brute[k].class_size == allc[k].class_size for k in brute)


def test_class_invariants_n5():
    g = full_graph(5)
    ctx = context(5)
    rng = random.Random(13)
    classes = defaultdict(list)
    for a in g.vertices:
        for b in rng.sample(g.vertices, 10):
            if a != b:
                classes[canonical_pair(a, b).canonical_key].append((a, b))
    checked = 0
    for members in list(classes.values())[:100]:
        a0, b0 = members[0]
        d0 = ctx.distance(a0, b0)
        k0 = kappa(a0, b0, ctx=ctx)
        degs = (degree(parse_newick(a0)), degree(parse_newick(b0)))
        for a, b in members[1:4]:
            assert ctx.distance(a, b) == d0
            assert (degree(parse_newick(a)), degree(parse_newick(b))) == degs
            assert kappa(a, b, ctx=ctx) == k0
            checked += 1
    assert checked > 50
