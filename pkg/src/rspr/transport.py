"""Exact earth mover's (W1) distance between finitely supported measures.

Masses are scaled to integers by their common denominator and the resulting
transportation problem is solved by a primal-dual min-cost-flow method:
shortest-path potential updates alternate with Dinic max-flow phases on the
zero-reduced-cost arcs.  Everything stays in integer arithmetic, and the final
potentials are an exact dual certificate of optimality.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .walks import Measure

__all__ = [
    "TransportPlan",
    "TransportError",
    "solve_transport",
    "min_cost_transport",
    "w1",
    "check_plan",
]


class TransportError(ValueError):
    pass


@dataclass(frozen=True)
class TransportPlan:
    """Optimal plan: ``flows`` as (source key, sink key, mass); exact ``cost``.

    ``row_potential``/``col_potential`` satisfy u_i + v_j <= d(i, j) with
    equality on every used pair, and sum(a u) + sum(b v) == cost.
    """

    flows: tuple[tuple[str, str, Fraction], ...]
    cost: Fraction
    row_potential: tuple[Fraction, ...] = ()
    col_potential: tuple[Fraction, ...] = ()


def min_cost_transport(supply: Sequence[int], demand: Sequence[int], cost: np.ndarray):
    """Integer transportation problem.

    Returns ``(flow, u, v)``: an optimal integer flow matrix and integer duals
    with ``u[i] + v[j] <= cost[i, j]``, tight wherever ``flow > 0``.
    """
    s = [int(x) for x in supply]
    t = [int(x) for x in demand]
    if any(x < 0 for x in s) or any(x < 0 for x in t):
        raise TransportError("negative supply or demand")
    if sum(s) != sum(t):
        raise TransportError("supply and demand totals differ")
    C = np.asarray(cost, dtype=np.int64)
    m, k = len(s), len(t)
    if C.shape != (m, k):
        raise TransportError(f"cost matrix shape {C.shape} != {(m, k)}")
    if (C < 0).any():
        raise TransportError("costs must be nonnegative")

    flow = [[0] * k for _ in range(m)]
    rs = list(s)
    rd = list(t)
    # rc[i, j] = C[i, j] + ps[i] - pt[j] >= 0 throughout, and == 0 on used arcs
    ps = np.zeros(m, dtype=np.int64)
    pt = np.zeros(k, dtype=np.int64)
    remaining = sum(rs)
    limit = sys.getrecursionlimit()
    if 4 * (m + k) + 100 > limit:
        sys.setrecursionlimit(4 * (m + k) + 100)

    while remaining > 0:
        rc = C + ps[:, None] - pt[None, :]
        ds, dt = _dijkstra(rc, flow, rs, rd)
        cut = min(dt[j] for j in range(k) if rd[j] > 0)
        if cut == math.inf:  # pragma: no cover - complete bipartite graph is always connected
            raise TransportError("infeasible transportation problem")
        ps += np.minimum(ds, cut).astype(np.int64)
        pt += np.minimum(dt, cut).astype(np.int64)
        rc = C + ps[:, None] - pt[None, :]
        adm = [np.flatnonzero(row == 0).tolist() for row in rc]
        remaining -= _max_flow(adm, flow, rs, rd, m, k)
    return np.array(flow, dtype=object), -ps, pt


def _dijkstra(rc: np.ndarray, flow, rs, rd):
    m, k = rc.shape
    inf = math.inf
    ds = np.full(m, inf)
    dt = np.full(k, inf)
    for i in range(m):
        if rs[i] > 0:
            ds[i] = 0.0
    done_s = np.zeros(m, dtype=bool)
    done_t = np.zeros(k, dtype=bool)
    rcf = rc.astype(float)
    while True:
        cs = np.where(done_s, inf, ds)
        ct = np.where(done_t, inf, dt)
        i = int(np.argmin(cs))
        j = int(np.argmin(ct))
        if cs[i] == inf and ct[j] == inf:
            break
        if cs[i] <= ct[j]:
            done_s[i] = True
            np.minimum(dt, cs[i] + rcf[i], out=dt)
        else:
            done_t[j] = True
            if rd[j] > 0:
                # first deficit sink settled: nothing farther affects the potential update
                break
            d = ct[j]
            for r in range(m):
                if flow[r][j] > 0 and d < ds[r]:
                    ds[r] = d
    return ds, dt


def _max_flow(adm, flow, rs, rd, m, k) -> int:
    """Dinic max flow on admissible arcs (forward i->j, backward j->i where flow > 0)."""
    total = 0
    while True:
        level = [-1] * (m + k)
        queue = [i for i in range(m) if rs[i] > 0]
        for i in queue:
            level[i] = 0
        sink_level = -1
        head = 0
        while head < len(queue):
            x = queue[head]
            head += 1
            if sink_level >= 0 and level[x] >= sink_level:
                continue
            if x < m:
                for j in adm[x]:
                    y = m + j
                    if level[y] < 0:
                        level[y] = level[x] + 1
                        if rd[j] > 0 and sink_level < 0:
                            sink_level = level[y]
                        queue.append(y)
            else:
                j = x - m
                for i in range(m):
                    if level[i] < 0 and flow[i][j] > 0:
                        level[i] = level[x] + 1
                        queue.append(i)
        if sink_level < 0:
            return total
        ptr = [0] * (m + k)
        back = {}

        def push(x: int, cap: int) -> int:
            if x >= m:
                j = x - m
                got = 0
                if level[x] == sink_level:
                    if rd[j] > 0:
                        got = min(cap, rd[j])
                        rd[j] -= got
                    return got
                arcs = back.get(j)
                if arcs is None:
                    arcs = back[j] = [i for i in range(m) if flow[i][j] > 0 and level[i] == level[x] + 1]
                while ptr[x] < len(arcs) and got < cap:
                    i = arcs[ptr[x]]
                    f = flow[i][j]
                    if f > 0:
                        sent = push(i, min(cap - got, f))
                        if sent:
                            flow[i][j] -= sent
                            got += sent
                            if got == cap:
                                break
                    ptr[x] += 1
                return got
            got = 0
            row = adm[x]
            want = level[x] + 1
            while ptr[x] < len(row) and got < cap:
                j = row[ptr[x]]
                if level[m + j] == want:
                    sent = push(m + j, cap - got)
                    if sent:
                        flow[x][j] += sent
                        got += sent
                        if got == cap:
                            break
                ptr[x] += 1
            return got

        progressed = 0
        for i in range(m):
            if level[i] == 0 and rs[i] > 0:
                sent = push(i, rs[i])
                rs[i] -= sent
                progressed += sent
        if progressed == 0:  # pragma: no cover - a level graph reaching a sink always admits flow
            return total
        total += progressed


def solve_transport(a: Sequence[Fraction], b: Sequence[Fraction], cost: np.ndarray):
    """Exact rational transport between mass vectors ``a`` and ``b``.

    Returns ``(flows, value, u, v)`` with ``flows`` a dict (i, j) -> Fraction.
    """
    a = [Fraction(x) for x in a]
    b = [Fraction(x) for x in b]
    if sum(a) != sum(b):
        raise TransportError("measures have different total mass")
    den = 1
    for x in a + b:
        den = den * x.denominator // math.gcd(den, x.denominator)
    supply = [int(x * den) for x in a]
    demand = [int(x * den) for x in b]
    flow, u, v = min_cost_transport(supply, demand, cost)
    C = np.asarray(cost, dtype=np.int64)
    flows = {}
    total = 0
    for i in range(len(a)):
        for j in range(len(b)):
            f = flow[i, j]
            if f:
                flows[(i, j)] = Fraction(f, den)
                total += f * int(C[i, j])
    value = Fraction(total, den)
    return flows, value, [Fraction(int(x)) for x in u], [Fraction(int(x)) for x in v]


DistanceSource = Callable[[Sequence[str], Sequence[str]], np.ndarray]


def w1(a: Measure, b: Measure, dist, cap: int | None = None) -> TransportPlan:
    """Optimal transport plan between two measures under a tree distance.

    ``dist`` is either an object with ``matrix(rows, cols, cap)`` (entries
    above ``cap`` reported as ``cap + 1``) or a callable ``dist(rows, cols)``
    returning exact distances.  For step measures of x and y, ``cap =
    d(x, y) + 2`` bounds every support distance.
    """
    rows, cols = a.support, b.support
    if hasattr(dist, "matrix"):
        if cap is None:
            raise TransportError("a capped distance oracle needs cap")
        C = np.asarray(dist.matrix(rows, cols, cap), dtype=np.int64)
        if (C > cap).any():
            raise TransportError(f"support distances exceed the cap {cap}; distance oracle incomplete")
    else:
        C = np.asarray(dist(rows, cols), dtype=np.int64)
    if C.shape != (len(rows), len(cols)) or (C < 0).any():
        raise TransportError("distance oracle returned an invalid matrix")
    flows, value, u, v = solve_transport(a.masses, b.masses, C)
    plan = tuple((rows[i], cols[j], f) for (i, j), f in sorted(flows.items()))
    return TransportPlan(plan, value, tuple(u), tuple(v))


def check_plan(a: Measure, b: Measure, plan: TransportPlan, cost: np.ndarray) -> None:
    """Raise AssertionError unless ``plan`` is feasible and certified optimal."""
    ai = {k: i for i, k in enumerate(a.support)}
    bi = {k: j for j, k in enumerate(b.support)}
    out = [Fraction(0)] * len(ai)
    inn = [Fraction(0)] * len(bi)
    total = Fraction(0)
    for x, y, f in plan.flows:
        if f < 0:
            raise AssertionError("negative flow")
        out[ai[x]] += f
        inn[bi[y]] += f
        total += f * int(cost[ai[x], bi[y]])
    if out != a.masses or inn != b.masses:
        raise AssertionError("plan marginals differ from the measures")
    if total != plan.cost:
        raise AssertionError("plan cost differs from the flow cost")
    u, v = plan.row_potential, plan.col_potential
    for i in range(len(u)):
        for j in range(len(v)):
            if u[i] + v[j] > int(cost[i, j]):
                raise AssertionError("dual infeasible")
    for x, y, f in plan.flows:
        if f > 0 and u[ai[x]] + v[bi[y]] != int(cost[ai[x], bi[y]]):
            raise AssertionError("complementary slackness violated")
    dual = sum(m * p for m, p in zip(a.masses, u)) + sum(m * p for m, p in zip(b.masses, v))
    if dual != plan.cost:
        raise AssertionError("dual objective differs from primal cost")
