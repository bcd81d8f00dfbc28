import random

import pytest
from hypothesis import given, settings, strategies as st

from gglab.errors import ConfigurationError, InputError
from gglab.presentation import Presentation, Strategy, dehn_reduce, raag_reduce

from oracles import reduce_word


def test_parse_and_strategy():
    assert Presentation.parse("gens: a b\n").strategy == Strategy.FREE
    g2 = Presentation.parse("gens: a b c d\nrel: abABcdCD  # surface\n")
    assert g2.strategy == Strategy.DEHN
    z2 = Presentation.parse("gens: a t\nrel: atAT\nelectrify: t\n")
    assert z2.strategy == Strategy.COMMUTATION
    assert z2.electrify == ("t",)
    assert Presentation.parse(z2.to_text()).to_text() == z2.to_text()


@pytest.mark.parametrize("text,msg", [
    ("gens a b\n", "line 1"),
    ("gens: a b\nfoo: x\n", "line 2"),
    ("rel: ab\n", "gens"),
    ("gens: a b\nrel: ac\n", "unknown symbol"),
    ("gens: a b\nelectrify: c\n", "electrified"),
])
def test_parse_errors_name_the_problem(text, msg):
    with pytest.raises(InputError, match=msg):
        Presentation.parse(text)


def test_small_cancellation_rejected():
    # Z^2 written with a non-commutator relator fails C'(1/6)
    with pytest.raises(ConfigurationError, match="C'"):
        Presentation.parse("gens: a b\nrel: abAB\nrel: aabb\n")


def test_dehn_reduce_on_genus2():
    p = Presentation.parse("gens: a b c d\nrel: abABcdCD\n")
    r = "abABcdCD"
    for k in range(len(r)):
        rot = r[k:] + r[:k]
        assert dehn_reduce(rot, p) == ""
        assert dehn_reduce(rot[::-1].swapcase(), p) == ""
    # more than half a relator is replaced by the shorter complement
    assert dehn_reduce("abABc", p) == "dcD"
    assert p.equal("abABc", dehn_reduce("abABc", p))
    with pytest.raises(ConfigurationError):
        dehn_reduce("ab", Presentation.free("ab"))


def _commuting_shuffle(word, commute, rng):
    w = list(word)
    for _ in range(3 * len(w)):
        if len(w) < 2:
            break
        i = rng.randrange(len(w) - 1)
        if commute(w[i], w[i + 1]):
            w[i], w[i + 1] = w[i + 1], w[i]
    return "".join(w)


@settings(max_examples=60)
@given(st.text(alphabet="abtABT", max_size=14), st.integers(0, 10 ** 6))
def test_raag_normal_form_is_invariant_under_commutations(w, seed):
    p = Presentation.parse("gens: a b t\nrel: atAT\n")
    rng = random.Random(seed)
    v = _commuting_shuffle(w, p.commute, rng)
    assert p.normal_form(w) == p.normal_form(v)
    # exponent sums are preserved, and the normal form is never longer than the input
    assert len(p.normal_form(w)) <= len(reduce_word(w))
    assert p.bucket(w) == p.bucket(p.normal_form(w))


def test_raag_reduce_cancels_across_commuting_letters():
    p = Presentation.parse("gens: a t\nrel: atAT\n")
    assert raag_reduce("atA", p.commute) == "t"
    assert p.is_identity("atAT")
    assert not p.is_identity("ab".replace("b", "t"))


def test_free_group_rejects_relators():
    from gglab.words import Alphabet
    with pytest.raises(ConfigurationError):
        Presentation(Alphabet(("a",)), ("aa",), Strategy.FREE)
