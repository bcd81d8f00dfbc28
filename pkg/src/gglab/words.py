"""Letters, alphabets and free reduction.

Words are plain ``str`` objects: a generator is a lowercase letter and its
inverse is the matching uppercase letter.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InputError


def inverse_letter(s: str) -> str:
    return s.swapcase()


def inverse(word: str) -> str:
    return word[::-1].swapcase()


def free_reduce(word: str, alphabet: "Alphabet | None" = None) -> str:
    """Cancel adjacent ``xX`` pairs until none remain."""
    if alphabet is not None:
        alphabet.check(word)
    out: list[str] = []
    for s in word:
        if out and out[-1] == s.swapcase() and out[-1] != s:
            out.pop()
        else:
            out.append(s)
    return "".join(out)


def is_reduced(word: str) -> bool:
    return all(word[i] != word[i + 1].swapcase() for i in range(len(word) - 1))


def cyclic_reduce(word: str) -> str:
    w = free_reduce(word)
    i, j = 0, len(w) - 1
    while i < j and w[i] == w[j].swapcase():
        i += 1
        j -= 1
    return w[i:j + 1]


def rotations(word: str) -> list[str]:
    return [word[i:] + word[:i] for i in range(len(word))] if word else [""]


@dataclass(frozen=True)
class Alphabet:
    """Ordered generators; symbol order is generators first, then inverses."""

    generators: tuple[str, ...]
    symbols: tuple[str, ...] = field(init=False, repr=False)
    rank: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        gens = tuple(self.generators)
        if not gens:
            raise InputError("alphabet needs at least one generator")
        for g in gens:
            if len(g) != 1 or not g.isalpha() or not g.islower():
                raise InputError(f"generator {g!r} must be a single lowercase letter")
        if len(set(gens)) != len(gens):
            raise InputError("duplicate generator")
        symbols = gens + tuple(g.upper() for g in gens)
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "rank", {s: i for i, s in enumerate(symbols)})

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def identity(self) -> str:
        """Printable name of the empty word ("1" when e is a generator)."""
        return "1" if "e" in self.generators else "e"

    def show(self, word: str) -> str:
        return word or self.identity

    def check(self, word: str) -> None:
        for s in word:
            if s not in self.rank:
                raise InputError(f"unknown symbol {s!r} (alphabet {' '.join(self.generators)})")

    def parse(self, text: str) -> str:
        """Accept ``"a b B"``, ``"abB"`` or ``"a b^-1"`` and return the reduced word."""
        text = text.strip()
        if text == "" or (text in ("e", "1") and text not in self.rank):
            return ""
        letters = []
        for tok in text.replace("*", " ").split():
            if tok.endswith("^-1") and len(tok) == 4:
                letters.append(tok[0].swapcase())
            else:
                letters.extend(tok)
        word = "".join(letters)
        return free_reduce(word, self)

    def key(self, word: str) -> tuple:
        """Shortlex sort key."""
        return (len(word), tuple(self.rank[s] for s in word))

    def generator_index(self, s: str) -> int:
        return self.rank[s.lower()]
