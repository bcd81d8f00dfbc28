import json

import numpy as np
import pytest

from gglab.ball import CayleyBall, build_ball
from gglab.errors import ResourceError
from gglab.presentation import Presentation

from oracles import free_words, nx_graph, all_pairs, tree_distance

G2 = "gens: a b c d\nrel: abABcdCD\n"


@pytest.mark.parametrize("R", [0, 1, 2, 5, 8])
def test_free_ball_size(f2, R):
    # sphere k has 4 * 3^(k-1) reduced words
    b = build_ball(f2, R)
    assert b.n == 1 + 2 * (3 ** R - 1)
    assert set(b.vertices) == set(free_words("ab", R))


def test_free_ball_graph_distances_are_tree_distances(f2):
    b = build_ball(f2, 4)
    D = all_pairs(nx_graph(b.n, b.edges[:, :2].tolist()))
    rng = np.random.default_rng(1)
    for i, j in rng.integers(0, b.n, size=(300, 2)):
        assert D[int(i)][int(j)] == tree_distance(b.vertices[i], b.vertices[j])
    assert len(b.edges) == b.n - 1  # a tree


@pytest.mark.parametrize("R,n", [(0, 1), (1, 5), (2, 13), (3, 25), (5, 61)])
def test_z2_ball_size(R, n):
    # lattice points with |x| + |y| <= R: 2R^2 + 2R + 1
    b = build_ball(Presentation.parse("gens: a t\nrel: atAT\n"), R)
    assert b.n == n == 2 * R * R + 2 * R + 1


def test_genus2_ball_sizes():
    p = Presentation.parse(G2)
    b3 = build_ball(p, 3)
    # no relation is shorter than 8, so up to radius 3 the ball is a free ball of rank 4
    assert b3.n == 1 + 8 + 56 + 392
    b4 = build_ball(p, 4)
    # at length 4 the 16 rotations of r and r^-1 glue 8 pairs of words
    assert b4.n - b3.n == 8 * 7 ** 3 - 8
    assert b4.safe_radius == 0 and b4.meta["safe_radius_certified"]


def test_locate_and_lengths(f2, ball8):
    assert ball8.locate("abBa") == ball8.index["aa"]
    assert ball8.locate("a" * 9) is None
    assert np.all(ball8.lengths == [len(w) for w in ball8.vertices])
    d = ball8.graph.distances_from(0)
    assert np.array_equal(d, ball8.lengths)


def test_dehn_locate_finds_equal_words():
    b = build_ball(Presentation.parse(G2), 4)
    i = b.locate("abAB")
    j = b.locate("dcDC")  # abAB = (cdCD)^-1
    assert i is not None and i == j


def test_restrict_is_prefix(ball8):
    r = ball8.restrict(5)
    assert r.vertices == ball8.vertices[:r.n]
    assert r.n == 1 + 2 * (3 ** 5 - 1)
    assert r.graph.n == r.n


def test_json_roundtrip(f2):
    b = build_ball(f2, 3)
    c = CayleyBall.from_json(json.loads(b.dumps()))
    assert c.vertices == b.vertices and np.array_equal(c.edges, b.edges)
    assert c.dumps() == b.dumps()


def test_budget(f2, monkeypatch):
    with pytest.raises(ResourceError, match="budget of 100"):
        build_ball(f2, 6, budget=100)
    monkeypatch.setenv("GGLAB_BUDGET", "50")
    with pytest.raises(ResourceError):
        build_ball(f2, 5)
