from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gglab.electrics import (angular_distance, coarse_embedding_report, coboundedness,
                             double_electrification_check, electrify, horoballify, proper_verdict, psi_table)
from gglab.errors import DomainError, InputError, ResourceError
from gglab.metric import MetricGraph
from gglab.subgroups import coset_pieces

from oracles import all_pairs, nx_graph, reduce_word, inv, tree_distance
from test_metric import connected_graphs


def coned_nx(n, edges, pieces, skip=None):
    G = nx_graph(n, edges)
    for i, p in enumerate(pieces):
        if i == skip:
            continue
        for y in p:
            G.add_edge(("c", i), int(y), weight=Fraction(1, 2))
    return G


pieces_st = st.lists(st.sets(st.integers(0, 8), min_size=1, max_size=4), min_size=1, max_size=3)


@settings(max_examples=50, deadline=None)
@given(connected_graphs(), pieces_st)
def test_coned_distances_match_networkx(ge, pieces):
    n, edges = ge
    pieces = [sorted(x for x in p if x < n) for p in pieces]
    pieces = [p for p in pieces if p]
    if not pieces:
        return
    g = MetricGraph.from_edges(n, edges)
    cs = electrify(g, pieces)
    D = all_pairs(coned_nx(n, edges, pieces))
    M = cs.graph.matrix()
    for x in range(n):
        for y in range(n):
            assert cs.graph.value(M[x, y]) == D[x][y]
    for i, p in enumerate(pieces):
        assert cs.graph.value(M[cs.cone(i), p[0]]) == Fraction(1, 2)
    # coning never lengthens and pieces collapse to diameter <= 1
    assert (M[:n, :n] * g.scale <= g.matrix() * cs.graph.scale).all()
    for p in pieces:
        assert cs.graph.value(M[np.ix_(p, p)].max()) <= 1


@settings(max_examples=30, deadline=None)
@given(connected_graphs(max_n=8), pieces_st)
def test_angular_distance_avoids_own_cone(ge, pieces):
    n, edges = ge
    pieces = [sorted(x for x in p if x < n) for p in pieces]
    pieces = [p for p in pieces if len(p) >= 2]
    if not pieces:
        return
    cs = electrify(MetricGraph.from_edges(n, edges), pieces)
    D = all_pairs(coned_nx(n, edges, pieces, skip=0))
    p = pieces[0]
    assert angular_distance(cs, 0, p[0], p[-1]) == D[p[0]][p[-1]]


def test_angular_distance_needs_piece_points():
    cs = electrify(MetricGraph.from_edges(3, [(0, 1), (1, 2)]), [[0, 1]])
    with pytest.raises(DomainError):
        angular_distance(cs, 0, 0, 2)


def test_piece_outside_base_rejected():
    with pytest.raises(InputError):
        electrify(MetricGraph.from_edges(2, [(0, 1)]), [[0, 5]])
    with pytest.raises(InputError):
        electrify(MetricGraph.from_edges(2, [(0, 1)]), [[]])


def test_free_axis_electrification(ball8, axis_a):
    fam = coset_pieces(axis_a, ball8)
    cs = electrify(ball8.graph, fam)
    # in a tree the only way between a^-k and a^k avoiding the cone is the axis itself
    i = fam.representatives.index("")
    for k in range(1, 6):
        x, y = ball8.locate("A" * k), ball8.locate("a" * k)
        assert angular_distance(cs, i, x, y) == 2 * k
    # electric distance: count the cosets crossed, the oracle walks the reduced word
    rng = np.random.default_rng(0)
    for x, y in rng.integers(0, ball8.n, size=(100, 2)):
        w = reduce_word(inv(ball8.vertices[x]) + ball8.vertices[y])
        # maximal a-syllables become one unit each (or their length when it is 1)
        syl = [len(s) for s in w.replace("b", " ").replace("B", " ").split()]
        want = w.count("b") + w.count("B") + sum(min(s, 1) for s in syl)
        assert cs.graph.dist(int(x), int(y)) == want


def brute_psi(cs, pieces):
    out = {}
    for i, p in enumerate(pieces):
        for a in range(len(p)):
            for b in range(a + 1, len(p)):
                r = int(cs.base.dist(p[a], p[b]))
                v = angular_distance(cs, i, p[a], p[b])
                out[r] = min(out.get(r, v), v)
    return out


@settings(max_examples=30, deadline=None)
@given(connected_graphs(max_n=8), pieces_st)
def test_psi_table_matches_pairwise_minimum(ge, pieces):
    n, edges = ge
    pieces = [sorted(x for x in p if x < n) for p in pieces]
    pieces = [p for p in pieces if p]
    if not pieces:
        return
    cs = electrify(MetricGraph.from_edges(n, edges), pieces)
    assert psi_table(cs).values == brute_psi(cs, pieces)


def test_psi_on_the_axis_is_strictly_increasing(ball8, axis_a):
    cs = electrify(ball8.graph, coset_pieces(axis_a, ball8))
    t = psi_table(cs)
    assert t.values == {r: r for r in range(1, 17)}
    assert t.strictly_increasing()
    assert proper_verdict(t) == (True, "psi increasing")


def test_proper_verdict_cases():
    # a 5-cycle with two adjacent-ish points coned: psi flat
    g = MetricGraph.from_edges(6, [(i, (i + 1) % 6) for i in range(6)])
    cs = electrify(g, [[0, 3]])
    t = psi_table(cs)
    assert t.values == {3: 3}
    assert proper_verdict(t) == (False, "final psi value below threshold")
    assert proper_verdict(t, bounded_threshold=3) == (True, "bounded pieces")
    cs = electrify(g, [[0, 1, 2, 3]])
    assert proper_verdict(psi_table(cs))[0] is False


def test_cosets_of_the_axis_are_cobounded(ball8, axis_a):
    fam = coset_pieces(axis_a, ball8)
    win = ball8.within(4)
    rep = coboundedness(ball8.graph, fam, within=win)
    # distinct a-lines in a tree project to single points
    assert rep.max_diameter == 0 and rep.dichotomy_violations == []
    assert rep.pairs > 0
    el = coboundedness(ball8.graph, fam, mode="electric", within=win)
    assert el.dichotomy_violations == []


def brute_horoball(n, edges, p, K):
    D = all_pairs(nx_graph(n, edges))
    G = nx_graph(n, edges)
    for k in range(1, K + 1):
        for a in p:
            for b in p:
                if a < b and D[a][b] <= 2 ** k:
                    G.add_edge((a, k) if k > 1 else a, (b, k) if k > 1 else b, weight=1)
        if k < K:
            for a in p:
                G.add_edge((a, k) if k > 1 else a, (a, k + 1), weight=1)
    return G


@pytest.mark.parametrize("K", [1, 2, 3, 4])
def test_horoball_on_a_line(K):
    n = 20
    edges = [(i, i + 1) for i in range(n - 1)]
    hs = horoballify(MetricGraph.from_edges(n, edges), [list(range(n))], K)
    assert hs.graph.n == n * K
    G = brute_horoball(n, edges, list(range(n)), K)
    D = dict(nx.single_source_dijkstra_path_length(G, 0))
    for y in range(n):
        assert hs.graph.dist(0, y) == D[y]
    # depth buys logarithmic distances
    if K == 4:
        assert hs.graph.dist(0, 19) < 19


def test_horoball_budget_and_depth():
    g = MetricGraph.from_edges(3, [(0, 1), (1, 2)])
    with pytest.raises(InputError):
        horoballify(g, [[0, 1, 2]], 0)
    with pytest.raises(ResourceError):
        horoballify(g, [[0, 1, 2]], 3, budget=5)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_double_electrification(space8, axis_a, seed):
    fam = coset_pieces(axis_a, space8.ball)
    rep = double_electrification_check(space8.graph, fam, K=4, n=200, seed=seed)
    assert rep.lam <= 4
    assert rep.identity_ok and rep.identity_pairs == 50
    assert not rep.degenerate


def test_shallow_horoballs_are_flagged(ball8, axis_a):
    rep = double_electrification_check(ball8.graph, coset_pieces(axis_a, ball8), K=2, n=20)
    assert rep.degenerate


def test_embedding_report_for_the_axis(ball8, axis_a):
    rep = coarse_embedding_report(ball8.graph, coset_pieces(axis_a, ball8), within=ball8.within(4))
    assert rep.proper
    assert rep.delta_el.delta4 <= 1
    assert rep.cobounded_max == 0
    obj = rep.to_json()
    assert set(obj) >= {"delta_el", "psi_table", "proper", "cobounded_max", "piece_qc"}
    # electric geodesics between points of a piece run through its cone, at distance 1/2
    assert obj["piece_qc"]["max"] == "1/2"
