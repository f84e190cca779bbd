"""Rooted binary phylogenetic trees with integer leaf labels.

Nodes are stored in preorder in flat tuples (node 0 is the root).  The
augmented root rho is implicit: the edge above node 0 is the root edge.
"""

from __future__ import annotations

import re
from typing import Iterable, Sequence

__all__ = [
    "Tree",
    "NewickError",
    "parse_newick",
    "to_newick",
    "canonicalize",
    "lca",
    "restrict",
    "ladder",
    "balanced",
]


class NewickError(ValueError):
    """Malformed or unsupported Newick input."""

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class Tree:
    """Immutable rooted binary X-tree.

    ``left[v]``/``right[v]`` are child ids (-1 for leaves), ``label[v]`` is the
    leaf label (0 for internal nodes), ``parent[v]`` is -1 for the root.
    Subtree node counts, minimum descendant labels and depths are cached.
    """

    __slots__ = ("left", "right", "label", "parent", "size", "min_label", "depth", "n", "_key", "_subkeys", "_leaf_of")

    def __init__(self, left: Sequence[int], right: Sequence[int], label: Sequence[int]):
        m = len(left)
        if not (len(right) == len(label) == m) or m == 0:
            raise ValueError("inconsistent node arrays")
        self.left = tuple(left)
        self.right = tuple(right)
        self.label = tuple(label)
        parent = [-1] * m
        for v in range(m):
            a, b = self.left[v], self.right[v]
            if (a < 0) != (b < 0):
                raise ValueError(f"node {v} has exactly one child")
            if a >= 0:
                if a <= v or b <= v:
                    raise ValueError("nodes must be numbered in preorder")
                parent[a] = v
                parent[b] = v
        self.parent = tuple(parent)
        size = [1] * m
        minl = [0] * m
        for v in range(m - 1, -1, -1):
            a = self.left[v]
            if a < 0:
                minl[v] = self.label[v]
            else:
                b = self.right[v]
                size[v] = 1 + size[a] + size[b]
                minl[v] = minl[a] if minl[a] < minl[b] else minl[b]
        depth = [0] * m
        for v in range(1, m):
            depth[v] = depth[parent[v]] + 1
        self.size = tuple(size)
        self.min_label = tuple(minl)
        self.depth = tuple(depth)
        self.n = (m + 1) // 2
        self._key = None
        self._subkeys = None
        self._leaf_of = None

    # -- construction -----------------------------------------------------
    @classmethod
    def from_nested(cls, nested) -> "Tree":
        """Build from nested 2-tuples of ints, e.g. ``((1, 2), (3, 4))``."""
        left: list[int] = []
        right: list[int] = []
        label: list[int] = []
        stack = [(nested, -1, 0)]
        while stack:
            item, par, side = stack.pop()
            v = len(left)
            if par >= 0:
                (left if side == 0 else right)[par] = v
            if isinstance(item, int):
                left.append(-1)
                right.append(-1)
                label.append(item)
            else:
                if len(item) != 2:
                    raise ValueError("internal nodes must have exactly two children")
                left.append(-1)
                right.append(-1)
                label.append(0)
                # right pushed first so the left child is numbered next (preorder)
                stack.append((item[1], v, 1))
                stack.append((item[0], v, 0))
        return cls(left, right, label)

    def to_nested(self, v: int = 0):
        if self.left[v] < 0:
            return self.label[v]
        return (self.to_nested(self.left[v]), self.to_nested(self.right[v]))

    # -- queries ----------------------------------------------------------
    @property
    def node_count(self) -> int:
        return len(self.left)

    @property
    def root(self) -> int:
        return 0

    def is_leaf(self, v: int) -> bool:
        return self.left[v] < 0

    def children(self, v: int) -> tuple[int, ...]:
        a = self.left[v]
        return () if a < 0 else (a, self.right[v])

    def sibling(self, v: int) -> int:
        p = self.parent[v]
        if p < 0:
            return -1
        return self.right[p] if self.left[p] == v else self.left[p]

    def leaves(self) -> list[int]:
        return [v for v in range(len(self.left)) if self.left[v] < 0]

    def labels(self) -> frozenset[int]:
        return frozenset(x for x in self.label if x)

    def leaf(self, label: int) -> int:
        """Node id of the leaf carrying ``label``."""
        if self._leaf_of is None:
            self._leaf_of = {x: v for v, x in enumerate(self.label) if x}
        return self._leaf_of[label]

    def in_subtree(self, v: int, root: int) -> bool:
        # preorder numbering: descendants of root occupy a contiguous id range
        return root <= v < root + self.size[root]

    def leaf_count(self, v: int) -> int:
        return (self.size[v] + 1) // 2

    def leaf_labels(self, v: int) -> list[int]:
        return [x for x in self.label[v : v + self.size[v]] if x]

    # -- keys -------------------------------------------------------------
    def subkeys(self) -> tuple[str, ...]:
        """Canonical Newick text (no semicolon) of every node's subtree."""
        if self._subkeys is None:
            m = len(self.left)
            sub = [""] * m
            lab, lft, rgt, minl = self.label, self.left, self.right, self.min_label
            for v in range(m - 1, -1, -1):
                a = lft[v]
                if a < 0:
                    sub[v] = str(lab[v])
                else:
                    b = rgt[v]
                    if minl[a] < minl[b]:
                        sub[v] = "(" + sub[a] + "," + sub[b] + ")"
                    else:
                        sub[v] = "(" + sub[b] + "," + sub[a] + ")"
            self._subkeys = tuple(sub)
        return self._subkeys

    @property
    def key(self) -> str:
        """Canonical Newick string; equal keys iff equal labeled topologies."""
        if self._key is None:
            self._key = self.subkeys()[0] + ";"
        return self._key

    def is_canonical(self) -> bool:
        minl = self.min_label
        return all(
            self.left[v] < 0 or minl[self.left[v]] < minl[self.right[v]] for v in range(len(self.left))
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tree):
            return NotImplemented
        return self.left == other.left and self.right == other.right and self.label == other.label

    def __hash__(self) -> int:
        return hash((self.left, self.right, self.label))

    def __repr__(self) -> str:
        return f"Tree({to_newick(self)!r})"

    def relabel(self, mapping) -> "Tree":
        """Return the tree with every leaf label ``x`` replaced by ``mapping[x]``."""
        return Tree(self.left, self.right, [mapping[x] if x else 0 for x in self.label])


# -- Newick -----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:([(),;])|(:[^(),;]*)|([^(),;:\s]+))")


def parse_newick(text: str) -> Tree:
    """Parse a rooted binary Newick string with integer leaf labels.

    Branch lengths are accepted and discarded.  Raises :class:`NewickError`
    naming the offending position for malformed input, non-binary nodes and
    duplicate or missing labels.
    """
    pos = 0
    end = len(text)
    # parse into nested tuples first, then let Tree number nodes in preorder
    stack: list[list] = []
    result = None
    seen: dict[int, int] = {}
    expect_item = True  # at start, after '(' or ','
    last = None
    while True:
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            if text[pos:].strip():
                raise NewickError(f"unexpected character {text[pos]!r}", pos)
            raise NewickError("missing terminating ';'", end)
        start = m.start(1) if m.group(1) else (m.start(2) if m.group(2) else m.start(3))
        pos = m.end()
        punct, length, name = m.group(1), m.group(2), m.group(3)
        if length is not None:
            if expect_item:
                raise NewickError("branch length without a node", start)
            continue
        if name is not None:
            if not expect_item:
                if last is not None and not isinstance(last, int):
                    # internal node name (e.g. support value) after ')': ignored
                    continue
                raise NewickError(f"unexpected label {name!r}", start)
            try:
                lab = int(name)
            except ValueError:
                raise NewickError(f"leaf label {name!r} is not an integer", start) from None
            if lab < 1:
                raise NewickError(f"leaf label {lab} must be positive", start)
            if lab in seen:
                raise NewickError(f"duplicate label {lab}", start)
            seen[lab] = start
            last = lab
            if not stack:
                result = lab
            else:
                stack[-1].append(lab)
            expect_item = False
            continue
        if punct == "(":
            if not expect_item:
                raise NewickError("unexpected '('", start)
            stack.append([])
            expect_item = True
        elif punct == ",":
            if expect_item or not stack:
                raise NewickError("unexpected ','", start)
            expect_item = True
        elif punct == ")":
            if expect_item or not stack:
                raise NewickError("unexpected ')'", start)
            kids = stack.pop()
            if len(kids) != 2:
                raise NewickError(f"node with {len(kids)} children; only binary trees are supported", start)
            node = (kids[0], kids[1])
            last = node
            if stack:
                stack[-1].append(node)
            else:
                result = node
            expect_item = False
        else:  # ';'
            if stack or expect_item:
                raise NewickError("unbalanced parentheses before ';'", start)
            if text[pos:].strip():
                raise NewickError("trailing text after ';'", pos)
            break
    if result is None:
        raise NewickError("empty tree", 0)
    if isinstance(result, int):
        raise NewickError("tree must have at least two leaves", 0)
    n = len(seen)
    missing = set(range(1, n + 1)) - set(seen)
    if missing:
        raise NewickError(f"labels must be exactly 1..{n}; missing {sorted(missing)}")
    return Tree.from_nested(result)


def to_newick(tree: Tree) -> str:
    """Newick text in the tree's stored child order."""

    def write(v: int) -> str:
        if tree.left[v] < 0:
            return str(tree.label[v])
        return "(" + write(tree.left[v]) + "," + write(tree.right[v]) + ")"

    return write(0) + ";"


def canonicalize(tree: Tree) -> Tree:
    """Order children so the child with the smaller minimum label is first."""
    if tree.is_canonical():
        return tree

    def nest(v: int):
        a = tree.left[v]
        if a < 0:
            return tree.label[v]
        b = tree.right[v]
        if tree.min_label[b] < tree.min_label[a]:
            a, b = b, a
        return (nest(a), nest(b))

    return Tree.from_nested(nest(0))


def lca(tree: Tree, a: int, b: int) -> int:
    """Deepest common ancestor of nodes ``a`` and ``b``."""
    depth, parent = tree.depth, tree.parent
    while depth[a] > depth[b]:
        a = parent[a]
    while depth[b] > depth[a]:
        b = parent[b]
    while a != b:
        a = parent[a]
        b = parent[b]
    return a


def restrict(tree: Tree, labels: Iterable[int]) -> Tree:
    """Induced subtree T|V on leaf labels ``labels``, keeping the original labels.

    Unlabelled nodes left with fewer than two children are suppressed.  The
    result's labels are not renumbered, so it is a Tree over a label subset.
    """
    keep = set(labels)
    if len(keep) < 2:
        raise ValueError("restrict needs at least two labels")
    unknown = keep - tree.labels()
    if unknown:
        raise ValueError(f"labels {sorted(unknown)} not in tree")

    def nest(v: int):
        a = tree.left[v]
        if a < 0:
            return tree.label[v] if tree.label[v] in keep else None
        x, y = nest(a), nest(tree.right[v])
        if x is None:
            return y
        if y is None:
            return x
        return (x, y)

    return canonicalize(Tree.from_nested(nest(0)))


# -- standard shapes ----------------------------------------------------------


def ladder(n: int) -> Tree:
    """Ladder (caterpillar) tree ``(((1,2),3),...,n)``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    nested = 1
    for x in range(2, n + 1):
        nested = (nested, x)
    return Tree.from_nested(nested)


def balanced(n: int) -> Tree:
    """Tree minimizing the sum of internal-node depths (leaves split as evenly as possible)."""
    if n < 2:
        raise ValueError("n must be at least 2")

    def build(lo: int, hi: int):
        if lo == hi:
            return lo
        k = hi - lo + 1
        mid = lo + (k + 1) // 2 - 1
        return (build(lo, mid), build(mid + 1, hi))

    return Tree.from_nested(build(1, n))
