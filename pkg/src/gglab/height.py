"""Algebraic height via pullbacks and geometric i-fold intersections on balls."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DomainError, InputError
from .metric import FULL_MATRIX_LIMIT, INF, bottleneck_constant, fmt, thickenings, undistortion_check
from .space import GroupSpace
from .subgroups import CoreGraph, conjugate, coset_pieces, orbit_points, pullback

MAX_TUPLES = 200_000
REPORT_WITNESSES = 50
EXACT_DIAMETER = 256


def reduced_words(alphabet, L: int) -> list[str]:
    """All reduced words of length <= L in shortlex order."""
    out = [""]
    layer = [""]
    for _ in range(L):
        nxt = []
        for w in layer:
            for s in alphabet.symbols:
                if w and w[-1] == s.swapcase():
                    continue
                nxt.append(w + s)
        out += nxt
        layer = nxt
    return out


def coset_representatives(cg: CoreGraph, L: int) -> list[str]:
    """Shortlex-least representative of every left coset having one of length <= L."""
    seen = set()
    reps = []
    for w in reduced_words(cg.alphabet, L):
        k = cg.coset_key(w)
        if k not in seen:
            seen.add(k)
            reps.append(w)
    return reps


# ---------------------------------------------------------------------------
# algebraic height


@dataclass
class AlgebraicWitness:
    cosets: tuple          # ((subgroup index, representative), ...); the first is (i, "")
    intersection: CoreGraph

    @property
    def level(self) -> int:
        return len(self.cosets)

    def to_json(self) -> dict:
        return {"level": self.level,
                "cosets": [[i, self.intersection.alphabet.show(g)] for i, g in self.cosets],
                "rank": self.intersection.rank,
                "generators": self.intersection.generators(),
                "shortest_element": self.intersection.shortest_nontrivial()}


def tuple_intersection(subgroups: Sequence[CoreGraph], cosets) -> CoreGraph:
    """Core graph of the intersection of the conjugates g H_i g^-1 over the tuple."""
    J = None
    for i, g in cosets:
        c = conjugate(subgroups[i], g)
        J = c if J is None else pullback(J, c)
    return J


@dataclass
class AlgebraicHeightReport:
    subgroups: list
    height: int
    L: int
    n_max: int
    witnesses: dict        # level -> list of AlgebraicWitness
    exhaustive: bool
    meta: dict = field(default_factory=dict)

    @property
    def bound_hit(self) -> bool:
        return self.height >= self.n_max and bool(self.witnesses.get(self.n_max))

    @property
    def height_label(self):
        return f">={self.n_max}" if self.bound_hit else self.height

    def verify(self) -> bool:
        for ws in self.witnesses.values():
            for w in ws:
                if tuple_intersection(self.subgroups, w.cosets).rank < 1:
                    return False
        return True

    def to_json(self) -> dict:
        return {"mode": "algebraic", "height": self.height_label, "exhaustive": self.exhaustive,
                "L": self.L, "B": None,
                "witnesses": [w.to_json() for lvl in sorted(self.witnesses)
                              for w in self.witnesses[lvl][:REPORT_WITNESSES]],
                "witness_counts": {str(k): len(v) for k, v in sorted(self.witnesses.items())},
                "meta": self.meta}


def algebraic_height(subgroups, L: int = 6, n_max: int = 6, max_tuples: int = MAX_TUPLES) -> AlgebraicHeightReport:
    """Largest number of distinct cosets (reps of length <= L) whose conjugates meet in an infinite subgroup."""
    if not isinstance(subgroups, (list, tuple)):
        subgroups = [subgroups]
    subgroups = list(subgroups)
    if not subgroups:
        raise InputError("at least one subgroup is needed")
    for h in subgroups:
        if not isinstance(h, CoreGraph):
            raise DomainError("algebraic height needs subgroups of a free group; use the geometric mode")
    if L < 0 or n_max < 1:
        raise InputError("need L >= 0 and n_max >= 1")
    reps = [coset_representatives(h, L) for h in subgroups]
    cands = [(b, g) for b in range(len(subgroups)) for g in reps[b]]
    witnesses: dict[int, list] = defaultdict(list)
    cache: dict = {}
    visited = 0
    complete = True

    def conj(c):
        if c not in cache:
            cache[c] = conjugate(subgroups[c[0]], c[1])
        return cache[c]

    def dfs(tup, J, start):
        nonlocal visited, complete
        if len(tup) >= n_max:
            complete = False
            return
        for k in range(start, len(cands)):
            if visited >= max_tuples:
                complete = False
                return
            c = cands[k]
            visited += 1
            J2 = pullback(J, conj(c))
            if J2.rank < 1:
                continue
            t2 = tup + (c,)
            witnesses[len(t2)].append(AlgebraicWitness(t2, J2))
            dfs(t2, J2, k + 1)

    for a in range(len(subgroups)):
        base = (a, "")
        if subgroups[a].rank < 1:
            continue
        witnesses[1].append(AlgebraicWitness((base,), subgroups[a]))
        # partners come after the base in the candidate order, so each set is met once per base
        dfs((base,), subgroups[a], cands.index(base) + 1)
    height = max((k for k, v in witnesses.items() if v), default=0)
    meta = {"cosets_per_subgroup": [len(r) for r in reps], "tuples_visited": visited,
            "max_tuples": max_tuples}
    return AlgebraicHeightReport(subgroups, height, L, n_max, dict(witnesses), complete, meta)


# ---------------------------------------------------------------------------
# geometric intersections


@dataclass
class GeometricIntersection:
    level: int
    cosets: tuple          # piece indices
    labels: tuple
    Delta: int
    J: np.ndarray
    diameter: Fraction
    diameter_exact: bool   # otherwise a lower bound

    def to_json(self, names=None) -> dict:
        return {"level": self.level, "cosets": list(self.labels), "Delta": self.Delta,
                "J": [names[x] if names else int(x) for x in self.J],
                "size": int(len(self.J)), "diameter": fmt(self.diameter),
                "diameter_exact": self.diameter_exact}


def family_pieces(space: GroupSpace, subgroups) -> tuple[list[np.ndarray], list[str]]:
    """Coset pieces of all subgroups (at least two ball points each); equal vertex sets are kept once."""
    if not isinstance(subgroups, (list, tuple)):
        subgroups = [subgroups]
    pieces, labels, seen = [], [], set()
    for k, h in enumerate(subgroups):
        fam = coset_pieces(h, space.ball)
        for r, p in zip(fam.representatives, fam.pieces):
            key = p.tobytes()
            if key in seen:
                continue
            seen.add(key)
            pieces.append(p)
            r = space.presentation.alphabet.show(r)
            labels.append(f"{r}H{k + 1}" if len(subgroups) > 1 else f"{r}H")
    return pieces, labels


def delta_grid(safe_radius: int, grid: Sequence[int] | None = None) -> list[int]:
    if grid is not None:
        grid = sorted(set(int(x) for x in grid))
        if not grid or grid[0] < 1:
            raise InputError("Delta grid values must be positive integers")
        return grid
    out, d = [1], 2
    while d <= safe_radius / 10:
        out.append(d)
        d *= 2
    return out


def substituted(delta) -> tuple[Fraction, Fraction]:
    """(2δ', 20δ'): the measured constant, with one graph step for 2δ and 20 for 20δ below δ = 1/2."""
    delta = Fraction(delta)
    if delta >= Fraction(1, 2):
        return 2 * delta, 20 * delta
    return Fraction(1), Fraction(20)


class _Scanner:
    def __init__(self, space: GroupSpace, pieces, labels, delta, window=None):
        self.space = space
        self.g = space.graph
        self.pieces = pieces
        self.labels = labels
        self.two_delta, self.tau = substituted(delta)
        win = space.window() if window is None else np.asarray(window, dtype=np.int64)
        self.in_window = np.zeros(space.n, dtype=np.bool_)
        self.in_window[win] = True
        self.nodes = 0
        self.truncated = False

    def index(self, Delta: int) -> dict:
        """Window point -> sorted list of pieces whose Delta-thickening contains it."""
        S: dict[int, list[int]] = defaultdict(list)
        for j, t in enumerate(thickenings(self.g, self.pieces, Delta)):
            for x in t[self.in_window[t]].tolist():
                S[x].append(j)
        return S

    def diameter(self, J: np.ndarray, need: int) -> tuple[int, bool]:
        """(value, exact) in units; inexact values are lower bounds >= need or upper bounds < need."""
        if len(J) < 2:
            return 0, True
        if self.g.n <= FULL_MATRIX_LIMIT:
            return int(self.g.submatrix(J).max()), True
        if len(J) <= 24:
            ub = max(self.space.word_bound(int(a), int(b)) for i, a in enumerate(J) for b in J[i + 1:])
            if ub * self.g.scale < need:
                return ub * self.g.scale, False
        if len(J) <= EXACT_DIAMETER:
            return int(self.g.rows(J, cols=J).max()), True
        r0 = self.g.rows([J[0]], cols=J)[0]
        far = J[int(np.argmax(r0))]
        lb = int(self.g.rows([far], cols=J)[0].max())
        if lb >= need:
            return lb, False
        if 2 * int(r0.max()) < need:
            return 2 * int(r0.max()), False
        best = 0
        step = max(1, 4_000_000 // len(J))
        for a in range(0, len(J), step):
            best = max(best, int(self.g.rows(J[a:a + step], cols=J).max()))
        return best, True

    def lesser_clause(self, tup, Delta: int, J: np.ndarray) -> bool:
        """J is not inside the 20δ-neighbourhood of the (Δ - 2δ)-thickened intersection."""
        r = Delta - self.two_delta
        if r < 0:
            return True
        thick = thickenings(self.g, [self.pieces[j] for j in tup], r)
        L = thick[0]
        for t in thick[1:]:
            L = np.intersect1d(L, t, assume_unique=True)
        if len(L) == 0:
            return True
        d = self.g.rows([L], cols=J, multi=True)[0].astype(np.int64)
        return bool((d > self.g.units(self.tau)).any())

    def intersection(self, tup, Delta: int) -> np.ndarray:
        thick = thickenings(self.g, [self.pieces[j] for j in tup], Delta)
        J = thick[0]
        for t in thick[1:]:
            J = np.intersect1d(J, t, assume_unique=True)
        return J[self.in_window[J]]

    def check(self, tup, Delta: int, J: np.ndarray | None = None):
        """Full three-clause test for one tuple; returns (GeometricIntersection | None, reason)."""
        if len(set(tup)) != len(tup) or len({self.pieces[j].tobytes() for j in tup}) != len(tup):
            return None, "cosets are not pairwise distinct"
        if J is None:
            J = self.intersection(tup, Delta)
        need = self.g.units(10 * Delta)
        d, exact = self.diameter(J, need)
        if d < need:
            return None, f"diameter {fmt(self.g.value(d))} < {10 * Delta}"
        if not self.lesser_clause(tup, Delta, J):
            return None, "J lies in the 20δ-neighbourhood of the lesser intersection"
        return GeometricIntersection(len(tup), tuple(tup), tuple(self.labels[j] for j in tup), Delta,
                                     J, self.g.value(d), exact), "accepted"

    def scan(self, Delta: int, levels: Sequence[int] | None, max_level: int, max_nodes: int):
        S = self.index(Delta)
        need = self.g.units(10 * Delta)
        co: dict = defaultdict(list)
        for x in sorted(S):
            js = S[x]
            for a in range(len(js)):
                for b in range(a + 1, len(js)):
                    co[(js[a], js[b])].append(x)
        out = []

        def extend(tup, J):
            if self.nodes >= max_nodes:
                self.truncated = True
                return
            self.nodes += 1
            if len(J) < 2:
                return
            d, exact = self.diameter(J, need)
            if d < need:
                return  # subsets of J cannot recover the diameter
            if (levels is None or len(tup) in levels) and self.lesser_clause(tup, Delta, J):
                out.append(GeometricIntersection(len(tup), tup, tuple(self.labels[j] for j in tup), Delta,
                                                 J, self.g.value(d), exact))
            if len(tup) >= max_level:
                return
            cand = defaultdict(list)
            for x in J.tolist():
                for c in S[x]:
                    if c > tup[-1]:
                        cand[c].append(x)
            for c in sorted(cand):
                extend(tup + (c,), np.asarray(cand[c], dtype=np.int64))

        for pair in sorted(co):
            extend(pair, np.asarray(co[pair], dtype=np.int64))
        return out


def enumerate_geometric_intersections(space: GroupSpace, subgroups, i: int | None = None,
                                      grid: Sequence[int] | None = None, delta=None,
                                      max_level: int = 64, max_nodes: int = MAX_TUPLES,
                                      pieces=None) -> tuple[list[GeometricIntersection], dict]:
    """Geometric i-fold intersections (all levels >= 2 when ``i`` is None).

    Each tuple is reported once, with the least Δ of the grid that passes.
    """
    if i is not None and i < 2:
        raise InputError("geometric intersections have level i >= 2")
    if pieces is None:
        pieces, labels = family_pieces(space, subgroups)
    else:
        pieces, labels = pieces
    if delta is None:
        delta = space.delta.delta4
    grid = delta_grid(space.safe_radius, grid)
    sc = _Scanner(space, pieces, labels, delta)
    found: dict = {}
    top = max_level if i is None else i
    for D in grid:
        for w in sc.scan(D, None if i is None else (i,), top, max_nodes):
            found.setdefault(w.cosets, w)
    out = [found[k] for k in sorted(found, key=lambda t: (len(t), t))]
    meta = {"Delta_grid": grid, "delta": fmt(delta), "two_delta_used": fmt(sc.two_delta),
            "twenty_delta_used": fmt(sc.tau), "pieces": len(pieces), "nodes": sc.nodes,
            "truncated": sc.truncated, "safe_radius": space.safe_radius}
    return out, meta


# ---------------------------------------------------------------------------
# geometric height


@dataclass
class GeometricHeightReport:
    height: int
    R: int
    B: Fraction
    witnesses: list
    level_one: dict
    meta: dict = field(default_factory=dict)

    @property
    def levels(self) -> dict:
        out: dict[int, int] = defaultdict(int)
        for w in self.witnesses:
            out[w.level] += 1
        return dict(sorted(out.items()))

    def shapes(self, space: GroupSpace) -> dict:
        """Level -> set of accepted J up to left translation."""
        out: dict = defaultdict(set)
        for w in self.witnesses:
            out[w.level].add(space.translation_key(w.J))
        return dict(out)

    def to_json(self, names=None) -> dict:
        per: dict = defaultdict(list)
        for w in self.witnesses:
            if len(per[w.level]) < REPORT_WITNESSES:
                per[w.level].append(w.to_json(names))
        return {"mode": "geometric", "height": self.height, "exhaustive": False, "R": self.R,
                "B": fmt(self.B), "level_one": self.level_one,
                "witness_counts": {str(k): v for k, v in self.levels.items()},
                "witnesses": [w for k in sorted(per) for w in per[k]],
                "meta": self.meta}


def _level_one(space: GroupSpace, subgroups, B) -> dict:
    """Is some subgroup unbounded at this scale?  Its orbit counts as unbounded when its
    diameter exceeds B or it reaches the outermost generator-length shell of the ball."""
    g = space.graph
    d0 = g.distances_from(0)[:space.n].astype(np.int64)
    reach_all = int(d0.max())
    out = {"unbounded": False, "orbits": []}
    for h in (subgroups if isinstance(subgroups, (list, tuple)) else [subgroups]):
        O = orbit_points(h, space.ball)
        gens = [w for w in h.generators() if w]
        shell = max((len(w) for w in gens), default=1) - 1
        reach = int(d0[O].max())
        diam = int(g.rows(O, cols=O).max()) if 1 < len(O) <= 2 * EXACT_DIAMETER else None
        if diam is None and len(O) > 1:
            diam = int(g.rows([O[int(np.argmax(d0[O]))]], cols=O)[0].max())  # lower bound
        diam = diam or 0
        big = diam > g.units(B)
        escapes = len(O) > 1 and reach >= reach_all - shell * g.scale
        out["orbits"].append({"points": int(len(O)), "diameter": fmt(g.value(diam)),
                              "reach": fmt(g.value(reach)), "ball_reach": fmt(g.value(reach_all)),
                              "shell": shell, "unbounded": bool(big or escapes)})
        out["unbounded"] |= bool(big or escapes)
    return out


def geometric_height(space: GroupSpace, subgroups, B=None, grid: Sequence[int] | None = None,
                     delta=None, max_level: int = 64, max_nodes: int = MAX_TUPLES) -> GeometricHeightReport:
    """Lower-bound estimate: the least i such that no enumerated (i+1)-fold intersection has diameter > B."""
    B = Fraction(2 * space.safe_radius, 10) if B is None else Fraction(B)
    if B <= 0:
        raise InputError("the boundedness threshold B must be positive")
    one = _level_one(space, subgroups, B)
    meta = {"safe_radius": space.safe_radius, "lower_bound": True, "truncated": False}
    if not one["unbounded"]:
        return GeometricHeightReport(0, space.radius, B, [], one, meta)
    ws, m = enumerate_geometric_intersections(space, subgroups, None, grid, delta, max_level, max_nodes)
    meta.update(m)
    sc = None
    big = []
    Bu = space.graph.units(B)
    for w in ws:
        d = space.graph.units(w.diameter)
        if not w.diameter_exact and d <= Bu:
            if sc is None:
                sc = _Scanner(space, [], [], 0)
            d, _ = sc.diameter(w.J, Bu + 1)
        if d > Bu:
            big.append(w)
    levels = {w.level for w in big}
    h = 1
    while h + 1 in levels:
        h += 1
    meta["max_level_seen"] = max(levels, default=1)
    return GeometricHeightReport(h, space.radius, B, big, one, meta)


# ---------------------------------------------------------------------------
# concentration and qi-intersection checks


@dataclass
class ConcentrationResult:
    x: int | None
    radius: Fraction | None
    bound: Fraction
    ok: bool
    notice: str = ""

    def to_json(self, names=None) -> dict:
        return {"x": None if self.x is None else (names[self.x] if names else self.x),
                "radius": None if self.radius is None else fmt(self.radius), "bound": fmt(self.bound),
                "ok": self.ok, "notice": self.notice}


def ball_concentration_check(space: GroupSpace, pieces, Delta: int, delta, C) -> ConcentrationResult:
    """A point x on a geodesic between far points of the thickened intersection, with every
    piece meeting the ball of radius 2C + 10δ around x (δ below 1/2 is read as 1/2)."""
    two_delta, _ = substituted(delta)
    bound = 2 * Fraction(C) + 5 * two_delta
    pieces = [np.asarray(p, dtype=np.int64) for p in pieces]
    if not pieces or any(len(p) == 0 for p in pieces):
        raise InputError("pieces must be nonempty")
    if len(pieces) == 1:
        return ConcentrationResult(int(pieces[0].min()), Fraction(0), bound, True)
    sc = _Scanner(space, pieces, [str(i) for i in range(len(pieces))], delta)
    J = sc.intersection(tuple(range(len(pieces))), Delta)
    g = space.graph
    if len(J) < 2 or sc.diameter(J, g.units(10 * Delta))[0] < g.units(10 * Delta):
        return ConcentrationResult(None, None, bound, False,
                                   "truncated: the pieces do not form a geometric intersection inside the safe radius")
    r0 = g.rows([J[0]], cols=J)[0]
    y1 = int(J[int(np.argmax(r0))])
    r1 = g.rows([y1], cols=J)[0]
    y2 = int(J[int(np.argmax(r1))])
    rows = g.rows([y1, y2]).astype(np.int64)
    inter = np.flatnonzero(rows[0] + rows[1] == rows[0, y2])
    inter = inter[(inter < space.n) & sc.in_window[np.minimum(inter, space.n - 1)]]
    if len(inter) == 0:
        return ConcentrationResult(None, None, bound, False, "truncated: no geodesic point inside the safe radius")
    D = g.rows(pieces, cols=inter, multi=True).astype(np.int64).max(axis=0)
    k = int(np.argmin(D))
    rad = g.value(int(D[k]))
    return ConcentrationResult(int(inter[k]), rad, bound, rad <= bound)


@dataclass
class QILevel:
    level: int
    pieces: int
    C_path: Fraction
    lam: Fraction | None
    C_dichotomy: Fraction
    vacuous: bool

    @property
    def C(self) -> Fraction:
        return max(self.C_path, self.C_dichotomy)

    def to_json(self) -> dict:
        return {"level": self.level, "pieces": self.pieces, "C_path": fmt(self.C_path),
                "lambda": None if self.lam is None else fmt(self.lam),
                "C_dichotomy": fmt(self.C_dichotomy), "C": fmt(self.C), "vacuous": self.vacuous}


def _neighbourhood_constant(g, b_units: int) -> Fraction:
    # Y^{+C} is connected in a graph with unit edges iff the MST bottleneck is at most 2C + 1
    if b_units >= INF:
        return Fraction(10 ** 9)
    b = Fraction(b_units, g.scale)
    return max(Fraction(0), Fraction(int(np.ceil(float(b - 1) / 2))))


def qi_intersection_check(space: GroupSpace, levels: dict, lam_max=4, B=None,
                          max_pieces: int = 16) -> dict[int, QILevel]:
    """Coarse path connectivity, undistortion and the projection dichotomy per level.

    ``levels`` maps a level to its list of pieces (vertex arrays).
    """
    g = space.graph
    B = Fraction(2 * space.safe_radius, 10) if B is None else Fraction(B)
    win = np.zeros(space.n, dtype=np.bool_)
    win[space.window()] = True
    out = {}
    for lvl in sorted(levels):
        ps = [np.asarray(p, dtype=np.int64) for p in levels[lvl]]
        ps = [p[win[p]] for p in ps]
        ps = [p for p in ps if len(p)][:max_pieces]
        mats = [g.submatrix(p).astype(np.int64) for p in ps]
        diam = max((int(M.max()) for M in mats), default=0)
        if diam <= g.units(B):
            out[lvl] = QILevel(lvl, len(ps), g.value(diam), None, g.value(diam), True)
            continue
        c_path, lam = Fraction(0), Fraction(1)
        for p, M in zip(ps, mats):
            b = bottleneck_constant(M)
            c_path = max(c_path, _neighbourhood_constant(g, b))
            if len(p) > 1 and b < INF:
                u = undistortion_check(g, p, g.value(b), lam_max)
                lam = max(lam, u.lam)
        c_dich = Fraction(0)
        for a, A in enumerate(ps):
            for b, Bp in enumerate(ps):
                if a == b:
                    continue
                M = g.rows(A, cols=Bp).astype(np.int64)
                proj = set()
                for row in M:
                    proj.update(Bp[row == row.min()].tolist())
                proj = np.asarray(sorted(proj), dtype=np.int64)
                dproj = int(g.submatrix(proj).max()) if len(proj) > 1 else 0
                back = int(g.rows([A], cols=proj, multi=True)[0].max())
                c_dich = max(c_dich, g.value(min(dproj, back)))
        out[lvl] = QILevel(lvl, len(ps), c_path, lam, c_dich, False)
    return out
