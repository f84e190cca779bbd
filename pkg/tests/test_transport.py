import random
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from conftest import full_graph
from rspr.curvature import tight_adjacent_pair
from rspr.graph import GraphDistances
from rspr.transport import TransportError, TransportPlan, check_plan, min_cost_transport, solve_transport, w1
from rspr.walks import MH, UNIFORM, Measure, mh_step_measure, step_measure, uniform_step_measure


def lp_value(a, b, cost):
    """Transport LP solved by HiGHS in floating point."""
    m, k = len(a), len(b)
    a_eq = []
    for i in range(m):
        row = np.zeros(m * k)
        row[i * k : (i + 1) * k] = 1
        a_eq.append(row)
    for j in range(k):
        row = np.zeros(m * k)
        row[j::k] = 1
        a_eq.append(row)
    res = linprog(np.asarray(cost, float).ravel(), A_eq=np.array(a_eq), b_eq=[float(x) for x in a] + [float(x) for x in b])
    assert res.status == 0
    return res.fun


def flow_value(supply, demand, cost):
    """Integer min-cost flow by networkx network simplex."""
    g = nx.DiGraph()
    for i, s in enumerate(supply):
        g.add_node(("s", i), demand=-int(s))
    for j, d in enumerate(demand):
        g.add_node(("t", j), demand=int(d))
    for i in range(len(supply)):
        for j in range(len(demand)):
            g.add_edge(("s", i), ("t", j), weight=int(cost[i, j]))
    return nx.network_simplex(g)[0]


def random_instance(rng, m, k, total):
    def split(parts):
        cuts = sorted(rng.sample(range(1, total), parts - 1))
        return [b - a for a, b in zip([0] + cuts, cuts + [total])]

    cost = np.array([[rng.randint(0, 6) for _ in range(k)] for _ in range(m)])
    return split(m), split(k), cost


def test_integer_solver_against_network_simplex():
    rng = random.Random(17)
    for _ in range(300):
        m, k = rng.randint(1, 12), rng.randint(1, 12)
        total = rng.randint(max(m, k), 120)
        s, d, c = random_instance(rng, m, k, total)
        flow, u, v = min_cost_transport(s, d, c)
        assert (flow >= 0).all()
        assert list(flow.sum(axis=1)) == s and list(flow.sum(axis=0)) == d
        value = int((flow * c).sum())
        assert value == flow_value(s, d, c)
        assert (np.add.outer(u, v) <= c).all()
        assert sum(x * y for x, y in zip(s, u)) + sum(x * y for x, y in zip(d, v)) == value


def test_rational_solver_against_lp():
    rng = random.Random(23)
    for _ in range(60):
        m, k = rng.randint(1, 8), rng.randint(1, 8)
        s, d, c = random_instance(rng, m, k, 60)
        a = [Fraction(x, 60) for x in s]
        b = [Fraction(x, 60) for x in d]
        flows, value, _, _ = solve_transport(a, b, c)
        assert abs(float(value) - lp_value(a, b, c)) < 1e-9


def test_errors():
    with pytest.raises(TransportError):
        min_cost_transport([1, 2], [2], np.zeros((2, 1)))
    with pytest.raises(TransportError):
        min_cost_transport([-1, 2], [1], np.zeros((2, 1)))
    with pytest.raises(TransportError):
        solve_transport([Fraction(1, 2)], [Fraction(1)], np.zeros((1, 1)))
    a = uniform_step_measure("((((1,2),3),4),5);")
    with pytest.raises(TransportError):
        w1(a, a, GraphDistances(full_graph(5)))
    with pytest.raises(TransportError):
        w1(a, a, lambda r, c: -np.ones((len(r), len(c))))


def test_identity_and_point_masses():
    g = full_graph(5)
    gd = GraphDistances(g)
    a = mh_step_measure(g.vertices[7])
    plan = w1(a, a, gd, cap=4)
    assert plan.cost == 0
    for x, y in [(g.vertices[0], g.vertices[50]), (g.vertices[3], g.vertices[99])]:
        plan = w1(Measure.point(x), Measure.point(y), gd, cap=4)
        assert plan.cost == gd.pair(x, y)
        assert plan.flows == ((x, y, Fraction(1)),)


def test_tight_ladder_pair_cost():
    t, s = tight_adjacent_pair(5)
    g = full_graph(5)
    gd = GraphDistances(g)
    a, b = uniform_step_measure(t), uniform_step_measure(s)
    plan = w1(a, b, gd, cap=3)
    assert plan.cost == Fraction(11, 24)
    cost = gd.matrix(a.support, b.support, cap=3)
    check_plan(a, b, plan, cost)
    assert abs(lp_value(a.masses, b.masses, cost) - 11 / 24) < 1e-9


def test_callable_distance_matches_oracle():
    g = full_graph(5)
    gd = GraphDistances(g)
    a, b = uniform_step_measure(g.vertices[10]), uniform_step_measure(g.vertices[40])
    via_callable = w1(a, b, lambda r, c: gd.matrix(r, c, cap=10))
    assert via_callable.cost == w1(a, b, gd, cap=10).cost


def test_check_plan_detects_bad_plans():
    g = full_graph(5)
    gd = GraphDistances(g)
    a, b = uniform_step_measure(g.vertices[1]), uniform_step_measure(g.vertices[2])
    plan = w1(a, b, gd, cap=5)
    cost = gd.matrix(a.support, b.support, cap=5)
    bad_cost = TransportPlan(plan.flows, plan.cost + 1, plan.row_potential, plan.col_potential)
    with pytest.raises(AssertionError):
        check_plan(a, b, bad_cost, cost)
    bad_flows = TransportPlan(plan.flows[1:], plan.cost, plan.row_potential, plan.col_potential)
    with pytest.raises(AssertionError):
        check_plan(a, b, bad_flows, cost)


def test_w1_metric_on_step_measures():
    g = full_graph(5)
    gd = GraphDistances(g)
    rng = random.Random(31)
    for _ in range(40):
        x, y, z = (step_measure(k, rng.choice([UNIFORM, MH])) for k in rng.sample(g.vertices, 3))
        dxy = w1(x, y, gd, cap=10).cost
        assert dxy == w1(y, x, gd, cap=10).cost
        assert w1(x, z, gd, cap=10).cost <= dxy + w1(y, z, gd, cap=10).cost


def test_plans_certified_on_n5_pairs():
    g = full_graph(5)
    gd = GraphDistances(g)
    rng = random.Random(8)
    for _ in range(100):
        x, y = rng.sample(g.vertices, 2)
        a, b = step_measure(x, MH), step_measure(y, MH)
        d = gd.pair(x, y)
        plan = w1(a, b, gd, cap=d + 2)
        check_plan(a, b, plan, gd.matrix(a.support, b.support, cap=d + 2))


@st.composite
def transport_instances(draw):
    m = draw(st.integers(1, 7))
    k = draw(st.integers(1, 7))
    supply = draw(st.lists(st.integers(0, 20), min_size=m, max_size=m))
    demand = draw(st.lists(st.integers(0, 20), min_size=k, max_size=k))
    total = sum(supply)
    # move the imbalance onto the last sink, keeping every entry nonnegative
    if sum(demand) > total:
        supply[-1] += sum(demand) - total
    else:
        demand[-1] += total - sum(demand)
    cost = draw(st.lists(st.lists(st.integers(0, 9), min_size=k, max_size=k), min_size=m, max_size=m))
    return supply, demand, np.array(cost)


@settings(max_examples=150, deadline=None)
@given(transport_instances())
def test_solver_matches_network_simplex_property(instance):
    s, d, c = instance
    flow, u, v = min_cost_transport(s, d, c)
    assert list(flow.sum(axis=1)) == s and list(flow.sum(axis=0)) == d
    assert int((flow * c).sum()) == flow_value(s, d, c)
    assert (np.add.outer(u, v) <= c).all()
