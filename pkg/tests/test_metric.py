import itertools
import json
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gglab.errors import DomainError, InputError
from gglab.metric import (INF, MetricGraph, bottleneck_constant, coarse_path_metric, delta_hyperbolicity,
                          fmt, geodesic_interval, gromov_product, lambda_hat, nearest_point_projection,
                          quasiconvexity_constant, thickenings, undistortion_check)

from oracles import all_pairs, brute_delta, nx_graph

LENGTHS = [Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2), Fraction(1, 4)]


@st.composite
def connected_graphs(draw, max_n=9):
    n = draw(st.integers(2, max_n))
    edges = []
    for v in range(1, n):  # random spanning tree keeps it connected
        u = draw(st.integers(0, v - 1))
        edges.append((u, v, draw(st.sampled_from(LENGTHS))))
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1), st.sampled_from(LENGTHS)),
                          max_size=8))
    edges += [e for e in extra if e[0] != e[1]]
    return n, edges


@settings(max_examples=60, deadline=None)
@given(connected_graphs())
def test_distances_match_dijkstra(ge):
    n, edges = ge
    g = MetricGraph.from_edges(n, edges)
    D = all_pairs(nx_graph(n, edges))
    M = g.matrix()
    for i in range(n):
        for j in range(n):
            assert g.value(M[i, j]) == D[i][j]


@settings(max_examples=40, deadline=None)
@given(connected_graphs(max_n=8))
def test_metric_axioms(ge):
    n, edges = ge
    M = MetricGraph.from_edges(n, edges).matrix().astype(np.int64)
    assert np.array_equal(M, M.T)
    assert np.all(np.diag(M) == 0) and np.all(M[~np.eye(n, dtype=bool)] > 0)
    for k in range(n):
        assert np.all(M <= M[:, [k]] + M[[k], :])


@settings(max_examples=40, deadline=None)
@given(connected_graphs(max_n=8))
def test_exact_delta_matches_quadruple_scan(ge):
    n, edges = ge
    g = MetricGraph.from_edges(n, edges)
    D = all_pairs(nx_graph(n, edges))
    assert delta_hyperbolicity(g, "exact").delta4 == brute_delta(D, range(n))


@settings(max_examples=20, deadline=None)
@given(connected_graphs(max_n=8), st.integers(0, 100))
def test_sampled_delta_is_a_lower_bound(ge, seed):
    n, edges = ge
    g = MetricGraph.from_edges(n, edges)
    s = delta_hyperbolicity(g, "sampled", sample=5, seed=seed)
    assert s.lower_bound and s.delta4 <= delta_hyperbolicity(g, "exact").delta4


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7, 8, 9, 10])
def test_cycle_delta(n):
    edges = [(i, (i + 1) % n) for i in range(n)]
    g = MetricGraph.from_edges(n, edges)
    D = all_pairs(nx_graph(n, edges))
    assert delta_hyperbolicity(g).delta4 == brute_delta(D, range(n))


def test_tree_is_zero_hyperbolic():
    T = nx.random_labeled_tree(40, seed=3) if hasattr(nx, "random_labeled_tree") else nx.random_tree(40, seed=3)
    g = MetricGraph.from_edges(40, list(T.edges()))
    r = delta_hyperbolicity(g)
    assert r.delta4 == 0 and r.blocks == 0


def test_disconnected_rejected():
    with pytest.raises(DomainError):
        delta_hyperbolicity(MetricGraph.from_edges(4, [(0, 1), (2, 3)]))


def test_gromov_product_and_interval():
    # path 0-1-2-3 with a pendant 4 at 1
    g = MetricGraph.from_edges(5, [(0, 1), (1, 2), (2, 3), (1, 4)])
    assert gromov_product(g, 0, 3, 4) == 1
    assert geodesic_interval(g, 0, 3).interval == frozenset({0, 1, 2, 3})
    assert nearest_point_projection(g, [2, 3], 4) == frozenset({2})


def test_quasiconvexity_of_path_in_cycle():
    # in a 6-cycle the set {0, 3} has the far side of the cycle as a geodesic too
    edges = [(i, (i + 1) % 6) for i in range(6)]
    g = MetricGraph.from_edges(6, edges)
    assert quasiconvexity_constant(g, [0, 3]).C == 1
    assert quasiconvexity_constant(g, [0, 1, 2, 3]).C == 1
    assert quasiconvexity_constant(g, range(6)).C == 0


def brute_lambda(a, b):
    q = 4
    while True:
        lam = Fraction(q, 4)
        if all(Fraction(x) <= lam * y + lam and Fraction(y) / lam - lam <= x for x, y in zip(a, b)):
            return lam
        q += 1


@given(st.lists(st.tuples(st.integers(0, 40), st.integers(0, 40)), min_size=1, max_size=12))
def test_lambda_hat_matches_grid_search(pairs):
    a = np.array([p[0] for p in pairs])
    b = np.array([p[1] for p in pairs])
    assert lambda_hat(a, b, 1) == brute_lambda(a.tolist(), b.tolist())


def brute_bottleneck(M):
    # minimax path weight via networkx MST on the complete graph
    G = nx.Graph()
    n = len(M)
    for i, j in itertools.combinations(range(n), 2):
        G.add_edge(i, j, weight=int(M[i][j]))
    T = nx.minimum_spanning_tree(G)
    return max((d["weight"] for *_, d in T.edges(data=True)), default=0)


@settings(max_examples=30, deadline=None)
@given(connected_graphs(max_n=8), st.sets(st.integers(0, 7), min_size=2, max_size=6))
def test_bottleneck_and_coarse_paths(ge, Y):
    n, edges = ge
    Y = sorted(y for y in Y if y < n)
    if len(Y) < 2:
        return
    g = MetricGraph.from_edges(n, edges)
    M = g.submatrix(Y).astype(np.int64)
    b = bottleneck_constant(M)
    assert b == brute_bottleneck(M)
    # at mesh b the coarse path metric is finite, just below it is not
    assert (coarse_path_metric(g, Y, g.value(b)) < INF).all()
    if b > 1:
        assert (coarse_path_metric(g, Y, g.value(b - 1)) >= INF).any()


def test_undistortion_of_a_line():
    g = MetricGraph.from_edges(10, [(i, i + 1) for i in range(9)])
    u = undistortion_check(g, range(0, 10, 3), 3, 1)
    assert u.ok and u.lam == 1


@settings(max_examples=30, deadline=None)
@given(connected_graphs(), st.sets(st.integers(0, 8), min_size=1, max_size=3), st.sampled_from([0, 1, 2]))
def test_thickenings_match_brute_force(ge, S, r):
    n, edges = ge
    S = [s for s in S if s < n] or [0]
    g = MetricGraph.from_edges(n, edges)
    D = all_pairs(nx_graph(n, edges))
    got = thickenings(g, [S], r)[0].tolist()
    want = [x for x in range(n) if min(D[s][x] for s in S) <= r]
    assert got == want


def test_json_roundtrip_and_fmt():
    g = MetricGraph.from_edges(3, [(0, 1, "1/2"), (1, 2, 2)])
    h = MetricGraph.from_json(json.loads(g.dumps()))
    assert np.array_equal(g.matrix(), h.matrix()) and g.scale == h.scale == 2
    assert fmt(g.dist(0, 2)) == "5/2"
    assert fmt(float("inf")) == "inf"


def test_invalid_edges():
    with pytest.raises(InputError):
        MetricGraph.from_edges(2, [(0, 2)])
    with pytest.raises(InputError):
        MetricGraph(2, [0], [1], [0])


def test_parallel_edges_keep_the_shortest():
    g = MetricGraph.from_edges(2, [(0, 1, "1/2"), (0, 1, "1/4"), (1, 1, 1)])
    nb, w = g.neighbors(0)
    assert nb.tolist() == [1] and g.value(w[0]) == Fraction(1, 4)
    assert g.neighbors(1)[0].tolist() == [0]
