import numpy as np
import pytest

from gglab.ball import build_ball
from gglab.presentation import Presentation
from gglab.space import GroupSpace

from conftest import fixture_path
from oracles import z2_coned_distance


def coords(w):
    return (w.count("a") - w.count("A"), w.count("t") - w.count("T"))


@pytest.fixture(scope="module")
def z2space():
    return GroupSpace.build(Presentation.load(fixture_path("ex65.txt")), 5)


def test_coned_lattice_distances(z2space):
    b = z2space.ball
    M = z2space.graph.matrix()
    for i in range(b.n):
        for j in range(b.n):
            want = z2_coned_distance(coords(b.vertices[i]), coords(b.vertices[j]))
            assert z2space.graph.value(M[i, j]) == want


def test_cone_count_and_names(z2space):
    # vertical lines x = -4..4 meet the ball in at least two points
    assert z2space.graph.n == z2space.n + 9
    assert z2space.graph.names[z2space.n].startswith("cone[")
    assert z2space.graph.meta["kind"] == "electrified-cayley-ball"


def test_plain_space_is_the_ball(space8, ball8):
    assert space8.graph is ball8.graph
    assert space8.delta.delta4 == 0


def test_translation_key(space8):
    b = space8.ball
    s1 = [b.locate(w) for w in ["", "a", "ab"]]
    s2 = [b.locate(w) for w in ["b", "ba", "bab"]]
    s3 = [b.locate(w) for w in ["", "a", "aB"]]
    assert space8.translation_key(s1) == space8.translation_key(s2) == ("", "a", "ab")
    assert space8.translation_key(s1) != space8.translation_key(s3)


def test_restrict_and_word_bound(space8):
    s = space8.restrict(4)
    assert s.radius == 4 and s.n == 161
    b = space8.ball
    assert space8.word_bound(b.locate("ab"), b.locate("aB")) == 2


def test_z2_translation_key_uses_normal_forms(z2space):
    b = z2space.ball
    s1 = [b.locate(w) for w in ["a", "at"]]
    s2 = [b.locate(w) for w in ["t", "ta"]]
    assert z2space.translation_key(s1) == z2space.translation_key([b.locate(""), b.locate("t")])
    assert len(z2space.translation_key(s2)) == 2


def test_space_delta_is_cached(z2space):
    d = z2space.delta
    assert d is z2space.delta and d.delta4 <= 1
