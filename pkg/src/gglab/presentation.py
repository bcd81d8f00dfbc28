"""Presentations and their word-problem strategies."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import ConfigurationError, InputError
from .words import Alphabet, cyclic_reduce, free_reduce, inverse, rotations


class Strategy(str, Enum):
    FREE = "FreeGroup"
    DEHN = "DehnSmallCancellation"
    COMMUTATION = "PartiallyCommutative"


def symmetrize(relators) -> list[str]:
    """All cyclic rotations of every relator and of its inverse, deduplicated, sorted."""
    out = set()
    for r in relators:
        out.update(rotations(r))
        out.update(rotations(inverse(r)))
    out.discard("")
    return sorted(out, key=lambda w: (len(w), w))


def small_cancellation_witness(relators, lam: float = 1 / 6):
    """Return None when C'(lam) holds, else (piece, r1, r2)."""
    rs = symmetrize(relators)
    for i, r1 in enumerate(rs):
        for r2 in rs[i + 1:]:
            k = 0
            m = min(len(r1), len(r2))
            while k < m and r1[k] == r2[k]:
                k += 1
            if k >= lam * m:
                return r1[:k], r1, r2
    return None


def commutator_pair(rel: str):
    """If ``rel`` is a cyclic rotation of [x, y] (or its inverse) return {x, y}."""
    if len(rel) != 4:
        return None
    for r in rotations(rel):
        x, y, X, Y = r
        if x.islower() and y.isalpha() and x != y.lower() and X == x.upper() and Y == y.swapcase():
            return frozenset((x, y.lower()))
    return None


def raag_reduce(word: str, commute) -> str:
    """Cancel ``x ... X`` pairs whose intervening letters all commute with ``x``."""
    w = list(free_reduce(word))
    i = 0
    while i < len(w):
        x = w[i]
        xi = x.swapcase()
        hit = -1
        for j in range(i + 1, len(w)):
            y = w[j]
            if y == xi:
                hit = j
                break
            if not commute(x, y):
                break
        if hit >= 0:
            del w[hit]
            del w[i]
            i = 0  # a cancellation can expose another one further left
        else:
            i += 1
    return "".join(w)


def raag_normal_form(word: str, commute, rank) -> str:
    """Lexicographically least word among commutation-equivalent reduced words."""
    w = list(raag_reduce(word, commute))
    out = []
    while w:
        best = -1
        for j, y in enumerate(w):
            if all(commute(w[k], y) for k in range(j)) and (best < 0 or rank[y] < rank[w[best]]):
                best = j
        out.append(w.pop(best))
    return "".join(out)


@dataclass
class Presentation:
    alphabet: Alphabet
    relators: tuple[str, ...] = ()
    strategy: Strategy = Strategy.FREE
    electrify: tuple[str, ...] = ()
    name: str = ""
    _sym: list = field(default_factory=list, repr=False)
    _by_first: dict = field(default_factory=dict, repr=False)
    _commuting: frozenset = field(default=frozenset(), repr=False)
    _moduli: tuple = field(default=(), repr=False)

    def __post_init__(self):
        rels = []
        for r in self.relators:
            self.alphabet.check(r)
            c = cyclic_reduce(r)
            if c:
                rels.append(c)
        self.relators = tuple(rels)
        for g in self.electrify:
            if g not in self.alphabet.generators:
                raise InputError(f"electrified generator {g!r} is not a generator")
        if self.strategy == Strategy.FREE and self.relators:
            raise ConfigurationError("FreeGroup strategy requires an empty relator list")
        if self.strategy == Strategy.COMMUTATION:
            pairs = [commutator_pair(r) for r in self.relators]
            if any(p is None for p in pairs):
                raise ConfigurationError("commutation strategy needs relators of the form xyXY")
            self._commuting = frozenset(pairs)
        if self.strategy == Strategy.DEHN:
            bad = small_cancellation_witness(self.relators)
            if bad is not None:
                raise ConfigurationError(
                    f"C'(1/6) fails: piece {bad[0]!r} shared by {bad[1]!r} and {bad[2]!r}")
            self._sym = symmetrize(self.relators)
            by_first: dict[str, list[str]] = {}
            for r in sorted(self._sym, key=lambda w: (-len(w), w)):
                by_first.setdefault(r[0], []).append(r)
            self._by_first = by_first
        gens = self.alphabet.generators
        mods = []
        for g in gens:
            sums = [r.count(g) - r.count(g.upper()) for r in self.relators]
            mods.append(math.gcd(*sums) if sums else 0)
        self._moduli = tuple(mods)

    # construction -------------------------------------------------------
    @classmethod
    def free(cls, gens: str = "ab", name: str = "") -> "Presentation":
        return cls(Alphabet(tuple(gens)), name=name or f"F{len(gens)}")

    @classmethod
    def parse(cls, text: str, name: str = "") -> "Presentation":
        gens = None
        rels: list[str] = []
        electrify: list[str] = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if ":" not in line:
                raise InputError(f"line {lineno}: expected 'key: value'")
            key, val = (s.strip() for s in line.split(":", 1))
            if key == "gens":
                gens = tuple(val.split())
            elif key == "rel":
                rels.append((lineno, val.replace(" ", "")))
            elif key == "electrify":
                electrify.extend((lineno, g) for g in val.split())
            elif key == "name":
                name = name or val
            else:
                raise InputError(f"line {lineno}: unknown key {key!r}")
        if gens is None:
            raise InputError("missing 'gens:' line")
        alphabet = Alphabet(gens)
        for lineno, r in rels:
            try:
                alphabet.check(r)
            except InputError as exc:
                raise InputError(f"line {lineno}: {exc}") from None
        for lineno, g in electrify:
            if g not in alphabet.generators:
                raise InputError(f"line {lineno}: electrified generator {g!r} is not a generator")
        rels = [r for _, r in rels]
        return cls(alphabet, tuple(rels), detect_strategy(rels), tuple(g for _, g in electrify), name)

    @classmethod
    def load(cls, path) -> "Presentation":
        path = Path(path)
        return cls.parse(path.read_text(), name=path.stem)

    def to_text(self) -> str:
        lines = [f"gens: {' '.join(self.alphabet.generators)}"]
        lines += [f"rel: {r}" for r in self.relators]
        if self.electrify:
            lines.append(f"electrify: {' '.join(self.electrify)}")
        return "\n".join(lines) + "\n"

    def without_electrify(self) -> "Presentation":
        return Presentation(self.alphabet, self.relators, self.strategy, (), self.name)

    # word problem -------------------------------------------------------
    def commute(self, x: str, y: str) -> bool:
        return x.lower() == y.lower() or frozenset((x.lower(), y.lower())) in self._commuting

    def normal_form(self, word: str) -> str | None:
        """Canonical shortlex form where the strategy gives one cheaply, else None."""
        if self.strategy == Strategy.FREE:
            return free_reduce(word)
        if self.strategy == Strategy.COMMUTATION:
            return raag_normal_form(word, self.commute, self.alphabet.rank)
        return None

    def reduce(self, word: str) -> str:
        if self.strategy == Strategy.DEHN:
            return dehn_reduce(word, self)
        return self.normal_form(word)

    def is_identity(self, word: str) -> bool:
        return self.reduce(word) == ""

    def equal(self, u: str, v: str) -> bool:
        return self.is_identity(inverse(u) + v)

    def bucket(self, word: str) -> tuple:
        """Image under the homomorphism to a product of cyclic groups (exponent sums)."""
        out = []
        for g, m in zip(self.alphabet.generators, self._moduli):
            e = word.count(g) - word.count(g.upper())
            out.append(e % m if m else e)
        return tuple(out)


def detect_strategy(rels) -> Strategy:
    if not rels:
        return Strategy.FREE
    if all(commutator_pair(cyclic_reduce(r)) is not None for r in rels):
        return Strategy.COMMUTATION
    return Strategy.DEHN


def dehn_reduce(word: str, p: Presentation) -> str:
    """Dehn's algorithm: shorten by relator halves until no more than half of any relator remains."""
    if p.strategy != Strategy.DEHN:
        raise ConfigurationError("dehn_reduce needs a DehnSmallCancellation presentation")
    w = free_reduce(word, p.alphabet)
    by_first = p._by_first
    changed = True
    while changed:
        changed = False
        for i in range(len(w)):
            for r in by_first.get(w[i], ()):
                n = len(r)
                k = 1
                while k < n and i + k < len(w) and w[i + k] == r[k]:
                    k += 1
                if 2 * k > n:
                    w = free_reduce(w[:i] + inverse(r[k:]) + w[i + k:])
                    changed = True
                    break
            if changed:
                break
    return w
