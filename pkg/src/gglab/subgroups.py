"""Finitely generated subgroups: folded core graphs for free groups, and
coset bookkeeping inside Cayley balls for every strategy."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, InputError
from .presentation import Presentation, Strategy, raag_reduce
from .words import Alphabet, free_reduce, inverse


def _edge(u: int, s: str, v: int):
    """Normalize a labelled edge to a positive generator label."""
    return (u, s, v) if s.islower() else (v, s.lower(), u)


def _fold(n: int, edges, base: int):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    changed = True
    while changed:
        changed = False
        out: dict[tuple[int, str], int] = {}
        for u, s, v in edges:
            ru, rv = find(u), find(v)
            for key, tgt in (((ru, s), rv), ((rv, s.upper()), ru)):
                t = out.get(key)
                if t is None:
                    out[key] = tgt
                else:
                    t = find(t)
                    tgt = find(tgt)
                    if t != tgt:
                        a, b = min(t, tgt), max(t, tgt)
                        parent[b] = a
                        changed = True
            if changed:
                break
    roots = sorted({find(x) for x in range(n)})
    E = sorted({(find(u), s, find(v)) for u, s, v in edges})
    return roots, E, find(base)


def _core(states, edges, base):
    """Prune vertices of degree <= 1 other than the basepoint."""
    states = set(states)
    edges = set(edges)
    while True:
        deg = {x: 0 for x in states}
        for u, _, v in edges:
            deg[u] += 1
            deg[v] += 1
        dead = {x for x, d in deg.items() if d <= 1 and x != base}
        if not dead:
            return states, edges
        states -= dead
        edges = {e for e in edges if e[0] not in dead and e[2] not in dead}


def _canonical(alphabet: Alphabet, states, edges, base) -> "CoreGraph":
    trans: dict[int, dict[str, int]] = {x: {} for x in states}
    for u, s, v in edges:
        trans[u][s] = v
        trans[v][s.upper()] = u
    order = {base: 0}
    q = deque([base])
    while q:
        x = q.popleft()
        for s in alphabet.symbols:
            y = trans[x].get(s)
            if y is not None and y not in order:
                order[y] = len(order)
                q.append(y)
    new = [dict() for _ in order]
    for x, i in order.items():
        new[i] = {s: order[y] for s, y in trans[x].items()}
    return CoreGraph(alphabet, tuple(new))


@dataclass(frozen=True)
class CoreGraph:
    """Folded basepointed graph; state 0 is the basepoint."""

    alphabet: Alphabet
    trans: tuple

    @property
    def n_states(self) -> int:
        return len(self.trans)

    @property
    def edges(self) -> list[tuple[int, str, int]]:
        return [(u, s, v) for u, t in enumerate(self.trans) for s, v in sorted(t.items()) if s.islower()]

    @property
    def rank(self) -> int:
        return len(self.edges) - self.n_states + 1

    def read(self, word: str, start: int = 0):
        """Follow ``word``; returns (state, letters consumed)."""
        x = start
        for i, s in enumerate(word):
            y = self.trans[x].get(s)
            if y is None:
                return x, i
            x = y
        return x, len(word)

    def contains(self, word: str) -> bool:
        x, k = self.read(free_reduce(word))
        return k == len(free_reduce(word)) and x == 0

    def right_coset_key(self, word: str) -> tuple:
        w = free_reduce(word)
        x, k = self.read(w)
        return (x, w[k:])

    def coset_key(self, word: str) -> tuple:
        """Key of the left coset word*H."""
        return self.right_coset_key(inverse(word))

    def coset_labels(self, ball) -> list:
        return [self.coset_key(w) for w in ball.vertices]

    def loops(self, max_len: int) -> list[str]:
        """All reduced basepoint loops of length <= max_len, shortlex order."""
        out = [""] if max_len >= 0 else []
        frontier = [("", 0)]
        for _ in range(max_len):
            nxt = []
            for w, x in frontier:
                for s in self.alphabet.symbols:
                    if w and w[-1] == s.swapcase():
                        continue
                    y = self.trans[x].get(s)
                    if y is not None:
                        nxt.append((w + s, y))
            frontier = nxt
            out.extend(w for w, x in nxt if x == 0)
        return sorted(out, key=self.alphabet.key)

    def shortest_nontrivial(self) -> str | None:
        """A shortest nontrivial reduced loop, or None for the trivial subgroup."""
        if self.rank == 0:
            return None
        best = None
        # a shortest loop is a tree path to an edge, the edge, and the tree path back
        dist, path = self._bfs_tree()
        for u, s, v in self.edges:
            if path[v] == path[u] + s or path[u] == path[v] + s.upper():
                continue  # tree edge
            w = free_reduce(path[u] + s + inverse(path[v]))
            if w and (best is None or self.alphabet.key(w) < self.alphabet.key(best)):
                best = w
        return best

    def _bfs_tree(self):
        path = {0: ""}
        dist = {0: 0}
        q = deque([0])
        while q:
            x = q.popleft()
            for s in self.alphabet.symbols:
                y = self.trans[x].get(s)
                if y is not None and y not in path:
                    path[y] = path[x] + s
                    dist[y] = dist[x] + 1
                    q.append(y)
        return dist, path

    def generators(self) -> list[str]:
        """Free basis read off a spanning tree."""
        _, path = self._bfs_tree()
        out = []
        for u, s, v in self.edges:
            if path[v] == path[u] + s or path[u] == path[v] + s.upper():
                continue
            out.append(free_reduce(path[u] + s + inverse(path[v])))
        return out

    def conjugacy_signature(self) -> tuple[tuple, str]:
        """(signature, u): signature is invariant under conjugation; u rebases to the
        conjugate u^-1 H u that realizes it."""
        states, edges = _core(range(self.n_states), self.edges, base=-1)
        if not states:
            return ((),), ""
        _, path = self._bfs_tree()
        best = None
        for v in sorted(states):
            cg = _canonical(self.alphabet, states, edges, v)
            sig = tuple(tuple(sorted(t.items())) for t in cg.trans)
            if best is None or sig < best[0]:
                best = (sig, path[v])
        return best

    def to_text(self) -> str:
        return "\n".join(self.generators()) + "\n"


def fold(generators: Sequence[str], alphabet: Alphabet) -> CoreGraph:
    n = 1
    edges = []
    for g in generators:
        alphabet.check(g)
        g = free_reduce(g)
        if not g:
            continue
        prev = 0
        for i, s in enumerate(g):
            if i == len(g) - 1:
                nxt = 0
            else:
                nxt = n
                n += 1
            edges.append(_edge(prev, s, nxt))
            prev = nxt
    roots, E, base = _fold(n, edges, 0)
    states, E = _core(roots, E, base)
    return _canonical(alphabet, states, E, base)


def membership(cg: CoreGraph, w: str) -> bool:
    return cg.contains(w)


def pullback(cg1: CoreGraph, cg2: CoreGraph) -> CoreGraph:
    """Core graph of the intersection of the two subgroups."""
    if cg1.alphabet != cg2.alphabet:
        raise InputError("pullback needs a common alphabet")
    idx = {(0, 0): 0}
    q = deque([(0, 0)])
    edges = []
    while q:
        p = q.popleft()
        a, b = p
        for s in cg1.alphabet.generators:
            x, y = cg1.trans[a].get(s), cg2.trans[b].get(s)
            if x is None or y is None:
                continue
            t = (x, y)
            if t not in idx:
                idx[t] = len(idx)
                q.append(t)
            edges.append((idx[p], s, idx[t]))
        for s in cg1.alphabet.generators:
            S = s.upper()
            x, y = cg1.trans[a].get(S), cg2.trans[b].get(S)
            if x is None or y is None:
                continue
            t = (x, y)
            if t not in idx:
                idx[t] = len(idx)
                q.append(t)
    states, E = _core(range(len(idx)), set(edges), 0)
    return _canonical(cg1.alphabet, states, E, 0)


def conjugate(cg: CoreGraph, g: str) -> CoreGraph:
    """Core graph of g H g^-1."""
    g = free_reduce(g)
    n = cg.n_states
    edges = list(cg.edges)
    if not g:
        return cg
    base = n
    prev = base
    n += 1
    for i, s in enumerate(g):
        if i == len(g) - 1:
            nxt = 0
        else:
            nxt = n
            n += 1
        edges.append(_edge(prev, s, nxt))
        prev = nxt
    roots, E, b = _fold(n, edges, base)
    states, E = _core(roots, E, b)
    return _canonical(cg.alphabet, states, E, b)


def same_subgroup(cg1: CoreGraph, cg2: CoreGraph) -> bool:
    return cg1.trans == cg2.trans


def double_coset_canonical(cg: CoreGraph, g: str, cg2: CoreGraph | None = None) -> str:
    """Shortlex-least element of H g K (K defaults to H).

    The set of reduced words for H g K is the free reduction of the language
    of an automaton (H-graph, then a path spelling g, then K-graph); after
    saturating it with cancellation shortcuts the least accepted reduced word
    is found greedily.
    """
    K = cg2 or cg
    alpha = cg.alphabet
    g = free_reduce(g)
    nH, nK = cg.n_states, K.n_states
    # states: H-graph [0, nH), g-path interior, K-graph [offK, offK+nK)
    inner = max(len(g) - 1, 0)
    offK = nH + inner
    N = offK + nK
    delta: list[dict[str, set]] = [dict() for _ in range(N)]

    def add(u, s, v):
        delta[u].setdefault(s, set()).add(v)

    for u, t in enumerate(cg.trans):
        for s, v in t.items():
            add(u, s, v)
    for u, t in enumerate(K.trans):
        for s, v in t.items():
            add(offK + u, s, offK + v)
    if g:
        prev = 0
        for i, s in enumerate(g):
            nxt = offK if i == len(g) - 1 else nH + i
            add(prev, s, nxt)
            prev = nxt
        start, accept = 0, offK
    else:
        # H K: identify the two basepoints through an epsilon move
        start, accept = 0, offK
    eps = [set([x]) for x in range(N)]
    if not g:
        eps[0].add(offK)
    changed = True
    while changed:
        changed = False
        for p in range(N):
            new = set()
            for q1 in list(eps[p]):
                new |= eps[q1] - eps[p]
                for s, tg in delta[q1].items():
                    for q2 in tg:
                        for q3 in eps[q2]:
                            for r in delta[q3].get(s.swapcase(), ()):
                                for r2 in eps[r]:
                                    if r2 not in eps[p]:
                                        new.add(r2)
            if new:
                eps[p] |= new
                changed = True
    # nodes (state, last letter) with reduced reading; distances to acceptance
    syms = alpha.symbols

    def step(state, last, s):
        if last and s == last.swapcase():
            return set()
        out = set()
        for q in eps[state]:
            for r in delta[q].get(s, ()):
                out |= eps[r]
        return out

    # backward BFS over (state, last) nodes
    nodes = [(x, l) for x in range(N) for l in ("",) + syms]
    succ: dict = {}
    for x, l in nodes:
        for s in syms:
            for y in step(x, l, s):
                succ.setdefault((x, l), []).append((s, (y, s)))
    pred: dict = {}
    for a, lst in succ.items():
        for s, b in lst:
            pred.setdefault(b, []).append(a)
    dist = {}
    q = deque()
    for x, l in nodes:
        if accept in eps[x]:
            dist[(x, l)] = 0
            q.append((x, l))
    while q:
        b = q.popleft()
        for a in pred.get(b, ()):
            if a not in dist:
                dist[a] = dist[b] + 1
                q.append(a)
    cur = {(y, "") for y in eps[start]}
    rem = min(dist.get(c, 10 ** 9) for c in cur)
    cur = {c for c in cur if dist.get(c) == rem}
    word = []
    while rem > 0:
        for s in syms:
            nxt = {b for a in cur for t, b in succ.get(a, ()) if t == s and dist.get(b) == rem - 1}
            if nxt:
                word.append(s)
                cur = nxt
                rem -= 1
                break
    return "".join(word)


# ---------------------------------------------------------------------------
# subgroups of non-free groups


@dataclass(frozen=True)
class SpecialSubgroup:
    """Subgroup generated by a subset of the generators of a partially commutative group."""

    presentation: Presentation
    letters: frozenset

    def _minimal(self, word: str) -> str:
        p = self.presentation
        w = list(raag_reduce(word, p.commute))
        changed = True
        while changed:
            changed = False
            for j in range(len(w) - 1, -1, -1):
                if w[j].lower() in self.letters and all(p.commute(w[j], y) for y in w[j + 1:]):
                    del w[j]
                    changed = True
                    break
        return p.normal_form("".join(w))

    def contains(self, word: str) -> bool:
        return self._minimal(word) == ""

    def coset_key(self, word: str) -> str:
        return self._minimal(word)

    def coset_labels(self, ball) -> list:
        return [self._minimal(w) for w in ball.vertices]

    def generators(self) -> list[str]:
        return sorted(self.letters)


@dataclass
class OrbitSubgroup:
    """Subgroup known only through generator words; cosets inside a ball are the
    components of the right-multiplication action restricted to the ball."""

    presentation: Presentation
    gens: tuple
    _cache: dict = field(default_factory=dict, repr=False)

    def coset_labels(self, ball) -> list:
        key = id(ball)
        if key in self._cache:
            return self._cache[key]
        parent = list(range(ball.n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        moves = list(self.gens) + [inverse(h) for h in self.gens]
        for i, w in enumerate(ball.vertices):
            for h in moves:
                j = ball.locate(w + h)
                if j is not None:
                    a, b = find(i), find(j)
                    if a != b:
                        parent[max(a, b)] = min(a, b)
        labels = [find(i) for i in range(ball.n)]
        self._cache[key] = labels
        return labels

    def coset_key(self, word: str, ball=None):
        if ball is None:
            raise ConfigurationError("orbit subgroups only know cosets inside a ball")
        i = ball.locate(word)
        if i is None:
            raise InputError(f"representative {word!r} lies outside the ball")
        return self.coset_labels(ball)[i]

    def contains(self, word: str, ball=None) -> bool:
        return self.coset_key(word, ball) == self.coset_key("", ball)

    def generators(self) -> list[str]:
        return list(self.gens)


def make_subgroup(p: Presentation, gens: Sequence[str]):
    gens = [free_reduce(g, p.alphabet) for g in gens]
    if p.strategy == Strategy.FREE:
        return fold(gens, p.alphabet)
    if p.strategy == Strategy.COMMUTATION and all(len(g) == 1 and g.islower() for g in gens):
        return SpecialSubgroup(p, frozenset(gens))
    return OrbitSubgroup(p, tuple(g for g in gens if g))


def parse_subgroup(text: str, p: Presentation):
    gens = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            try:
                gens.append(p.alphabet.parse(line))
            except InputError as exc:
                raise InputError(f"line {lineno}: {exc}") from None
    return make_subgroup(p, gens)


def load_subgroup(path, p: Presentation):
    return parse_subgroup(Path(path).read_text(), p)


# ---------------------------------------------------------------------------
# coset families


@dataclass
class CosetFamily:
    subgroup: object
    representatives: list[str]
    pieces: list[np.ndarray]
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.pieces)

    def to_json(self) -> list:
        return [{"rep": r, "points": [int(x) for x in p]} for r, p in zip(self.representatives, self.pieces)]


def _key(sub, word, ball):
    if isinstance(sub, OrbitSubgroup):
        return sub.coset_key(word, ball)
    return sub.coset_key(word)


def coset_pieces(sub, ball, reps: Sequence[str] | None = None, min_points: int = 2) -> CosetFamily:
    """Left cosets g*H intersected with the ball, as vertex-index arrays."""
    labels = sub.coset_labels(ball)
    groups: dict = {}
    for i, k in enumerate(labels):
        groups.setdefault(k, []).append(i)
    if reps is None:
        items = [(v[0], v) for v in groups.values() if len(v) >= min_points]
        items.sort()
        return CosetFamily(sub, [ball.vertices[i] for i, _ in items],
                           [np.asarray(v, dtype=np.int64) for _, v in items], {"auto": True, "min_points": min_points})
    seen: dict = {}
    pieces = []
    out_reps = []
    for r in reps:
        r = free_reduce(r, ball.presentation.alphabet)
        k = _key(sub, r, ball)
        if k in seen:
            raise InputError(f"representatives {seen[k]!r} and {r!r} define the same coset")
        seen[k] = r
        out_reps.append(r)
        pieces.append(np.asarray(groups.get(k, []), dtype=np.int64))
    return CosetFamily(sub, out_reps, pieces, {"auto": False})


def orbit_points(sub, ball) -> np.ndarray:
    """Indices of H intersected with the ball."""
    labels = sub.coset_labels(ball)
    k = labels[0]
    return np.asarray([i for i, x in enumerate(labels) if x == k], dtype=np.int64)
