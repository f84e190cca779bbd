"""Step measures and simulation of uniform and Metropolis-Hastings walks."""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from .graph import cached_neighbor_keys
from .spr import degree, select_uniform_neighbor
from .tree import Tree, canonicalize, parse_newick

__all__ = [
    "Measure",
    "WalkKind",
    "UNIFORM",
    "MH",
    "AccessHistogram",
    "degree_of",
    "uniform_step_measure",
    "mh_step_measure",
    "lazy_measure",
    "step_measure",
    "walk_rng",
    "simulate_walk",
    "access_time",
    "access_histogram",
]


@dataclass(frozen=True)
class Measure:
    """Finitely supported probability measure on canonical tree keys, exact masses."""

    atoms: tuple[tuple[str, Fraction], ...]

    def __post_init__(self):
        keys = [k for k, _ in self.atoms]
        if len(set(keys)) != len(keys):
            raise ValueError("repeated atom in measure")
        if any(m <= 0 for _, m in self.atoms):
            raise ValueError("masses must be positive")
        if sum(m for _, m in self.atoms) != 1:
            raise ValueError("masses must sum to exactly 1")

    @classmethod
    def from_mapping(cls, masses: Mapping[str, Fraction]) -> "Measure":
        return cls(tuple(sorted((k, Fraction(m)) for k, m in masses.items() if m != 0)))

    @classmethod
    def point(cls, key: str) -> "Measure":
        return cls(((key, Fraction(1)),))

    @property
    def support(self) -> list[str]:
        return [k for k, _ in self.atoms]

    @property
    def masses(self) -> list[Fraction]:
        return [m for _, m in self.atoms]

    def as_dict(self) -> dict[str, Fraction]:
        return dict(self.atoms)

    def __getitem__(self, key: str) -> Fraction:
        return self.as_dict().get(key, Fraction(0))

    def __len__(self) -> int:
        return len(self.atoms)


@dataclass(frozen=True)
class WalkKind:
    tag: str = "uniform"
    p: Fraction = Fraction(1)

    def __post_init__(self):
        if self.tag not in ("uniform", "metropolis_hastings"):
            raise ValueError(f"unknown walk kind {self.tag!r}")
        object.__setattr__(self, "p", Fraction(self.p))
        if not 0 < self.p <= 1:
            raise ValueError("laziness p must lie in (0, 1]")

    @property
    def short(self) -> str:
        return "mh" if self.tag == "metropolis_hastings" else "uniform"

    def lazy(self, p) -> "WalkKind":
        return WalkKind(self.tag, Fraction(p))

    @classmethod
    def parse(cls, text: str, p=1) -> "WalkKind":
        tag = {"uniform": "uniform", "mh": "metropolis_hastings", "metropolis_hastings": "metropolis_hastings"}.get(text)
        if tag is None:
            raise ValueError(f"unknown walk kind {text!r}")
        return cls(tag, Fraction(p))


UNIFORM = WalkKind("uniform")
MH = WalkKind("metropolis_hastings")


@lru_cache(maxsize=300_000)
def degree_of(key: str) -> int:
    return degree(parse_newick(key))


def _key(t: Tree | str) -> str:
    return t if isinstance(t, str) else canonicalize(t).key


def uniform_step_measure(t: Tree | str) -> Measure:
    """Mass 1/deg(t) on every neighbor of t."""
    key = _key(t)
    nbrs = cached_neighbor_keys(key)
    w = Fraction(1, len(nbrs))
    return Measure(tuple(sorted((k, w) for k in nbrs)))


def mh_step_measure(t: Tree | str) -> Measure:
    """Propose uniformly, accept with min(1, deg(t)/deg(S)); rejected mass stays at t."""
    key = _key(t)
    nbrs = cached_neighbor_keys(key)
    dt = len(nbrs)
    masses = {}
    stay = Fraction(1)
    for k in nbrs:
        ds = degree_of(k)
        m = Fraction(1, dt) if ds <= dt else Fraction(1, ds)
        masses[k] = m
        stay -= m
    if stay:
        masses[key] = stay
    return Measure.from_mapping(masses)


def lazy_measure(m: Measure, origin: Tree | str, p) -> Measure:
    """p * m plus a point mass of 1 - p at ``origin``."""
    p = Fraction(p)
    if not 0 < p <= 1:
        raise ValueError("laziness p must lie in (0, 1]")
    if p == 1:
        return m
    out = {k: p * w for k, w in m.atoms}
    key = _key(origin)
    out[key] = out.get(key, Fraction(0)) + (1 - p)
    return Measure.from_mapping(out)


def step_measure(t: Tree | str, kind: WalkKind) -> Measure:
    base = mh_step_measure(t) if kind.tag == "metropolis_hastings" else uniform_step_measure(t)
    return lazy_measure(base, t, kind.p)


# -- simulation -----------------------------------------------------------------


def walk_rng(seed: int, *parts: str) -> np.random.Generator:
    """Generator for (seed, parts), independent of the order experiments run in."""
    words = [int(seed)]
    for part in parts:
        digest = hashlib.sha256(part.encode()).digest()
        words.extend(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4))
    return np.random.default_rng(np.random.SeedSequence(words))


@lru_cache(maxsize=500_000)
def _select(key: str, r: int) -> str:
    return select_uniform_neighbor(parse_newick(key), r).key


def _step(key: str, kind: WalkKind, u_gate: float, u_pick: float, u_accept: float) -> str:
    if kind.p < 1 and u_gate >= kind.p:
        return key
    deg = degree_of(key)
    nxt = _select(key, int(u_pick * deg) + 1)
    if kind.tag == "metropolis_hastings":
        dn = degree_of(nxt)
        if dn > deg and u_accept * dn >= deg:
            return key
    return nxt


def simulate_walk(start: Tree | str, kind: WalkKind, steps: int, seed: int) -> Counter:
    """Visit counts of the positions after each of ``steps`` transitions.

    MH proposals use the indexed uniform neighbor selector, so no graph is built.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    key = _key(start)
    rng = walk_rng(seed, "walk", key, kind.short, str(kind.p))
    draws = rng.random((steps, 3))
    visits: Counter = Counter()
    for ug, up, ua in draws.tolist():
        key = _step(key, kind, ug, up, ua)
        visits[key] += 1
    return visits


def access_time(start: Tree | str, target: Tree | str, kind: WalkKind, seed: int, cap: int) -> int | None:
    """First step at which a walk from ``start`` sits at ``target``; None past ``cap``."""
    s, t = _key(start), _key(target)
    if s == t:
        raise ValueError("start and target coincide")
    rng = walk_rng(seed, "access", s, t, kind.short, str(kind.p))
    key = s
    step = 0
    while step < cap:
        block = rng.random((min(4096, cap - step), 3)).tolist()
        for ug, up, ua in block:
            step += 1
            key = _step(key, kind, ug, up, ua)
            if key == t:
                return step
    return None


@dataclass
class AccessHistogram:
    """First-passage step counts over ``replicates`` runs; ``capped`` runs never hit by step ``cap``."""

    class_key: str
    counts: dict[int, int] = field(default_factory=dict)
    replicates: int = 0
    capped: int = 0
    cap: int | None = None

    def __post_init__(self):
        if sum(self.counts.values()) + self.capped != self.replicates:
            raise ValueError("histogram counts do not add up to the replicate count")

    def observations(self) -> int:
        return self.replicates - self.capped

    def count(self, step: int) -> int:
        return self.counts.get(step, 0)

    def merge(self, other: "AccessHistogram") -> "AccessHistogram":
        counts = Counter(self.counts)
        counts.update(other.counts)
        if self.cap != other.cap:
            raise ValueError("cannot merge histograms recorded with different caps")
        return AccessHistogram(
            self.class_key, dict(sorted(counts.items())), self.replicates + other.replicates, self.capped + other.capped, self.cap
        )


class _Table:
    """Neighbor table grown on demand from the indexed neighbor selector."""

    def __init__(self):
        self.ids: dict[str, int] = {}
        self.keys: list[str] = []
        self.rows: list[np.ndarray | None] = []
        self.deg: list[int] = []

    def id(self, key: str) -> int:
        i = self.ids.get(key)
        if i is None:
            i = len(self.keys)
            self.ids[key] = i
            self.keys.append(key)
            self.rows.append(None)
            self.deg.append(degree_of(key))
        return i

    def build(self, i: int) -> None:
        key = self.keys[i]
        self.rows[i] = np.array([self.id(_select(key, r)) for r in range(1, self.deg[i] + 1)], dtype=np.int64)

    def arrays(self):
        width = max(self.deg)
        table = np.zeros((len(self.keys), width), dtype=np.int64)
        for i, row in enumerate(self.rows):
            if row is not None:
                table[i, : len(row)] = row
        return table, np.array(self.deg, dtype=np.int64)


def access_histogram(
    start: Tree | str,
    target: Tree | str,
    kind: WalkKind,
    replicates: int,
    seed: int,
    cap: int,
    class_key: str = "",
) -> AccessHistogram:
    """Access-time histogram from ``replicates`` independent walks run in lockstep."""
    s, t = _key(start), _key(target)
    if s == t:
        raise ValueError("start and target coincide")
    rng = walk_rng(seed, "histogram", s, t, kind.short, str(kind.p))
    tab = _Table()
    si, ti = tab.id(s), tab.id(t)
    pos = np.full(replicates, si, dtype=np.int64)
    built = set()
    counts: Counter = Counter()
    table, deg = None, None
    is_mh = kind.tag == "metropolis_hastings"
    p = float(kind.p)
    for step in range(1, cap + 1):
        if pos.size == 0:
            break
        need = set(np.unique(pos).tolist()) - built
        if need:
            for i in sorted(need):
                tab.build(i)
            built |= need
            table, deg = tab.arrays()
        u = rng.random((pos.size, 3))
        d = deg[pos]
        nxt = table[pos, (u[:, 1] * d).astype(np.int64)]
        move = np.ones(pos.size, dtype=bool)
        if p < 1:
            move &= u[:, 0] < p
        if is_mh:
            dn = deg[nxt]
            move &= (dn <= d) | (u[:, 2] * dn < d)
        pos = np.where(move, nxt, pos)
        hit = pos == ti
        nh = int(hit.sum())
        if nh:
            counts[step] = nh
            pos = pos[~hit]
    return AccessHistogram(class_key or f"{s}{t}", dict(sorted(counts.items())), replicates, int(pos.size), cap)
