import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gglab.ball import build_ball
from gglab.errors import InputError
from gglab.presentation import Presentation
from gglab.subgroups import (OrbitSubgroup, SpecialSubgroup, conjugate, coset_pieces, double_coset_canonical,
                             fold, make_subgroup, membership, orbit_points, pullback, same_subgroup)

from oracles import free_words, inv, reduce_word, subgroup_elements

WORDS6 = free_words("ab", 6)
NAMES = ["a", "a2b2", "kernel", "abaB"]


@pytest.mark.parametrize("name", NAMES)
def test_membership_matches_enumeration(subs, gens, name):
    want = subgroup_elements(gens[name], 6, slack=1)
    got = {w for w in WORDS6 if membership(subs[name], w)}
    assert got == want


def test_kernel_is_even_b_exponent(subs):
    # the index-2 kernel of b -> 1, a -> 0 contains exactly the words with even b-exponent sum
    for w in WORDS6:
        even = (w.count("b") - w.count("B")) % 2 == 0
        assert subs["kernel"].contains(w) == even


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(["aab", "bA", "abab", "B", "aBBa"]), min_size=1, max_size=3),
       st.lists(st.integers(0, 5), min_size=1, max_size=6), st.lists(st.booleans(), min_size=6, max_size=6))
def test_products_of_generators_are_members(g, picks, signs):
    from gglab.words import Alphabet
    cg = fold(g, Alphabet("ab"))
    w = "".join(g[i % len(g)] if s else inv(g[i % len(g)]) for i, s in zip(picks, signs))
    assert cg.contains(w)


def test_rank_and_generators_roundtrip(subs):
    assert [subs[n].rank for n in NAMES] == [1, 1, 3, 2]
    for n in NAMES:
        again = fold(subs[n].generators(), subs[n].alphabet)
        assert same_subgroup(again, subs[n])


@pytest.mark.parametrize("x,y", [("a", "kernel"), ("abaB", "kernel"), ("a2b2", "kernel"), ("a", "abaB"),
                                 ("a2b2", "abaB")])
def test_pullback_matches_set_intersection(subs, gens, x, y):
    pb = pullback(subs[x], subs[y])
    want = subgroup_elements(gens[x], 6, slack=1) & subgroup_elements(gens[y], 6, slack=1)
    assert {w for w in WORDS6 if pb.contains(w)} == want


@pytest.mark.parametrize("g", ["b", "ab", "bab", "BaB"])
def test_conjugate(subs, gens, g):
    for n in NAMES:
        c = conjugate(subs[n], g)
        for w in free_words("ab", 5):
            assert c.contains(w) == subs[n].contains(reduce_word(inv(g) + w + g))


@pytest.mark.parametrize("n", NAMES)
def test_conjugacy_signature_is_invariant(subs, n):
    sig, u = subs[n].conjugacy_signature()
    for g in ["b", "ab", "Bab", "aab"]:
        s2, u2 = conjugate(subs[n], g).conjugacy_signature()
        assert s2 == sig
        # rebasing realizes the same representative
        assert same_subgroup(conjugate(conjugate(subs[n], g), inv(u2)), conjugate(subs[n], inv(u)))


def test_signature_separates_non_conjugate(subs):
    sigs = {subs[n].conjugacy_signature()[0] for n in NAMES}
    assert len(sigs) == 4


def brute_double_coset_min(f2, gens, g, L=5):
    # the fixtures are Nielsen reduced, so short elements are short products
    H = subgroup_elements(gens, L, slack=1)
    return min({reduce_word(h + g + k) for h in H for k in H}, key=f2.alphabet.key)


@pytest.mark.parametrize("n", ["a", "a2b2", "abaB"])
@pytest.mark.parametrize("g", ["", "b", "ab", "Ba", "bab", "aBBa", "bb"])
def test_double_coset_canonical(f2, subs, gens, n, g):
    assert double_coset_canonical(subs[n], g) == brute_double_coset_min(f2, gens[n], g)


@pytest.mark.parametrize("g", ["", "b", "ab", "Ba", "bab", "aBBa", "bb"])
def test_double_coset_of_index_two_kernel(subs, g):
    # two double cosets: the kernel itself and its complement
    odd = (g.count("b") - g.count("B")) % 2
    assert double_coset_canonical(subs["kernel"], g) == ("b" if odd else "")


def test_double_coset_is_a_class_invariant(f2, subs, gens):
    h = subs["abaB"]
    for g in ["b", "bab", "Bab"]:
        c = double_coset_canonical(h, g)
        for x, y in itertools.product(["a", "baB", "A"], repeat=2):
            assert double_coset_canonical(h, reduce_word(x + g + y)) == c


@pytest.mark.parametrize("n", NAMES)
def test_coset_pieces_partition(ball8, subs, n):
    fam = coset_pieces(subs[n], ball8, min_points=1)
    allp = np.concatenate(fam.pieces)
    assert len(allp) == ball8.n and len(np.unique(allp)) == ball8.n
    for r, p in zip(fam.representatives, fam.pieces):
        for i in p[:20]:
            assert subs[n].contains(reduce_word(inv(r) + ball8.vertices[i]))


def test_orbit_points(ball8, subs):
    O = orbit_points(subs["a"], ball8)
    assert sorted(ball8.vertices[i] for i in O) == sorted(["a" * k for k in range(9)] + ["A" * k for k in range(1, 9)])


def test_duplicate_representatives_rejected(ball8, subs):
    with pytest.raises(InputError):
        coset_pieces(subs["a"], ball8, reps=["b", "baa"])


def test_non_free_subgroups():
    z2 = Presentation.parse("gens: a t\nrel: atAT\n")
    assert isinstance(make_subgroup(z2, ["a"]), SpecialSubgroup)
    assert isinstance(make_subgroup(z2, ["aa"]), OrbitSubgroup)
    b = build_ball(z2, 4)
    fam = coset_pieces(make_subgroup(z2, ["a"]), b)
    # horizontal lines y = -3..3 meet the ball in at least two points
    assert len(fam) == 7
    even = coset_pieces(make_subgroup(z2, ["aa"]), b)
    assert all(len(set(b.vertices[i].count("a") - b.vertices[i].count("A") for i in p)) >= 1 for p in even.pieces)
    assert orbit_points(make_subgroup(z2, ["aa"]), b).tolist() == sorted(
        b.locate(w) for w in ["", "aa", "AA", "aaaa", "AAAA"])
