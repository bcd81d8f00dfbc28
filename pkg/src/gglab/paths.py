"""Electric geodesics, de-electrification, quasigeodesic constants, meetings
and penetration diagnostics."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .electrics import ConedSpace
from .errors import DomainError, InputError
from .metric import INF, MetricGraph, fmt


@dataclass
class ElectricPath:
    vertices: list[int]
    cone_visits: list[tuple[int, int, int]]   # (piece, entry, exit)
    length: Fraction
    backtracking: bool = False


@dataclass
class AmbientPath:
    vertices: list[int]
    provenance: list[tuple[int, int, int]] = field(default_factory=list)  # (start, end, piece)


def _weight(g: MetricGraph, x: int, y: int) -> int:
    nb, w = g.neighbors(x)
    k = np.searchsorted(nb, y)
    if k >= len(nb) or nb[k] != y:
        raise DomainError(f"vertices {x} and {y} are not adjacent")
    return int(w[k])


def greedy_geodesic(g: MetricGraph, u: int, v: int, mask=None) -> list[int]:
    """Shortest path u -> v; at each step move to the least-index neighbour on a geodesic."""
    dv = g.rows([v], mask=mask)[0].astype(np.int64)
    if dv[u] >= INF:
        raise DomainError(f"vertices {u} and {v} are not connected")
    path = [u]
    x = u
    while x != v:
        nb, w = g.neighbors(x)
        for y, wt in zip(nb, w):
            if (mask is None or not mask[y]) and dv[y] + wt == dv[x]:
                x = int(y)
                break
        path.append(x)
    return path


def _visits(path: Sequence[int], cs: ConedSpace):
    visits = []
    for k, x in enumerate(path):
        if x >= cs.base.n:
            visits.append((x - cs.base.n, path[k - 1], path[k + 1]))
    seen, back = set(), False
    for piece, _, _ in visits:
        if piece in seen:
            back = True
        seen.add(piece)
    return visits, back


def electric_geodesic(cs: ConedSpace, u: int, v: int) -> ElectricPath:
    path = greedy_geodesic(cs.graph, u, v)
    visits, back = _visits(path, cs)
    length = sum((Fraction(_weight(cs.graph, a, b), cs.graph.scale) for a, b in zip(path, path[1:])), Fraction(0))
    return ElectricPath(path, visits, length, back)


def deelectrify(p: ElectricPath, cs: ConedSpace) -> AmbientPath:
    """Replace each cone visit by a base geodesic between its entry and exit points."""
    out: list[int] = []
    prov = []
    k = 0
    verts = p.vertices
    while k < len(verts):
        x = verts[k]
        if x >= cs.base.n:
            piece = x - cs.base.n
            a, b = verts[k - 1], verts[k + 1]
            try:
                seg = greedy_geodesic(cs.base, a, b)
            except DomainError as exc:
                raise DomainError(f"cannot de-electrify: piece {piece} ({cs.labels[piece]}) "
                                  f"is disconnected between {a} and {b}") from exc
            start = len(out) - 1
            out.extend(seg[1:])
            prov.append((start, len(out) - 1, piece))
            k += 2
            continue
        out.append(x)
        k += 1
    return AmbientPath(out, prov)


def reelectrify(a: AmbientPath, cs: ConedSpace) -> ElectricPath:
    """Undo ``deelectrify``: collapse every replaced segment back to entry, cone, exit."""
    verts: list[int] = []
    last = 0
    for s, e, piece in a.provenance:
        verts.extend(a.vertices[last:s + 1])
        verts.append(cs.cone(piece))
        last = e
    verts.extend(a.vertices[last:])
    visits, back = _visits(verts, cs)
    length = sum((Fraction(_weight(cs.graph, x, y), cs.graph.scale) for x, y in zip(verts, verts[1:])), Fraction(0))
    return ElectricPath(verts, visits, length, back)


def electrify_path(path: Sequence[int], cs: ConedSpace) -> ElectricPath:
    """Elementary electrification: shortcut each maximal excursion between two points of one piece."""
    member: dict[int, int] = {}
    for i, p in enumerate(cs.pieces):
        for x in p:
            member.setdefault(int(x), i)
    verts: list[int] = []
    k = 0
    path = list(path)
    while k < len(path):
        x = path[k]
        verts.append(x)
        i = member.get(x)
        if i is not None:
            piece = set(int(y) for y in cs.pieces[i])
            j = max(t for t in range(k, len(path)) if path[t] in piece)
            if j > k + 1 or (j == k + 1 and _weight(cs.base, x, path[j]) > cs.base.scale):
                verts.append(cs.cone(i))
                k = j
                continue
        k += 1
    visits, back = _visits(verts, cs)
    length = sum((Fraction(_weight(cs.graph, x, y), cs.graph.scale) for x, y in zip(verts, verts[1:])), Fraction(0))
    return ElectricPath(verts, visits, length, back)


@dataclass
class QGConstants:
    lam: Fraction
    mu: int
    pair: tuple | None


def quasigeodesic_constants(path: AmbientPath | Sequence[int], base: MetricGraph) -> QGConstants:
    verts = list(path.vertices if isinstance(path, AmbientPath) else path)
    if len(verts) <= 1:
        return QGConstants(Fraction(1), 2, None)
    arc = [0]
    for x, y in zip(verts, verts[1:]):
        arc.append(arc[-1] + _weight(base, x, y))
    uniq = sorted(set(verts))
    pos = {v: i for i, v in enumerate(uniq)}
    D = base.rows(uniq, cols=uniq).astype(np.int64)
    best, pair = Fraction(1), None
    two = 2 * base.scale
    for i in range(len(verts)):
        for j in range(i + 1, len(verts)):
            d = D[pos[verts[i]], pos[verts[j]]]
            if d >= INF:
                raise DomainError("path leaves the component")
            r = Fraction(arc[j] - arc[i], max(d + two, base.scale))
            if r > best:
                best, pair = r, (i, j)
    return QGConstants(best, 2, pair)


# ---------------------------------------------------------------------------
# meetings


@dataclass
class MeetingParams:
    Delta: Fraction
    eps: Fraction
    delta: Fraction = Fraction(0)

    def __post_init__(self):
        self.Delta, self.eps, self.delta = Fraction(self.Delta), Fraction(self.eps), Fraction(self.delta)
        if self.Delta <= 0:
            raise InputError("Delta must be positive")
        if not 0 < self.eps < 1:
            raise InputError("eps must lie in (0, 1)")

    @property
    def two_delta(self) -> Fraction:
        # below delta = 1/2 a single graph step stands in for 2*delta
        return 2 * self.delta if self.delta >= Fraction(1, 2) else Fraction(1)

    @property
    def tau(self) -> Fraction:
        return max(20 * self.delta, Fraction(1))


@dataclass
class MeetingReport:
    params: MeetingParams
    pairs: list[tuple[int, int]]
    raw_pairs: list[tuple[int, int]]
    meta: dict

    def to_json(self, names=None) -> dict:
        nm = (lambda x: names[x]) if names else (lambda x: x)
        return {"delta": fmt(self.params.Delta), "eps": fmt(self.params.eps),
                "pairs": [[nm(a), nm(b)] for a, b in self.pairs], "meta": self.meta}


def detect_meetings(H, Y, params: MeetingParams, base: MetricGraph, within=None,
                    max_candidates: int = 4000) -> MeetingReport:
    H = sorted(set(int(x) for x in H))
    Y = sorted(set(int(x) for x in Y))
    if not H or not Y:
        raise DomainError("meeting sets must be nonempty")
    rows = base.rows([H, Y], multi=True).astype(np.int64)
    dH, dY = rows[0], rows[1]
    s = base.scale
    eD = params.eps * params.Delta
    near = (dH * 1 <= eD * s) & (dY <= eD * s)
    near[base.n_points:] = False
    if within is not None:
        w = np.zeros(base.n, dtype=bool)
        w[np.asarray(within, dtype=np.int64)] = True
        near &= w
    cand = np.flatnonzero(near)
    if len(cand) > max_candidates:
        raise InputError(f"{len(cand)} meeting candidates exceed the limit of {max_candidates}")
    thr = eD - params.two_delta
    close = np.flatnonzero((dH < thr * s) & (dY < thr * s))
    if len(close):
        dclose = base.distance_to_set(close).astype(np.int64)
        bad = dclose[cand] <= params.tau * s
    else:
        bad = np.zeros(len(cand), dtype=bool)
    M = base.submatrix(cand).astype(np.int64)
    raw = []
    for a in range(len(cand)):
        for b in range(a + 1, len(cand)):
            if M[a, b] < INF and M[a, b] >= params.Delta * s and not (bad[a] and bad[b]):
                raw.append((a, b))
    # dominance: drop a pair when a longer qualifying pair has both its points in its interval
    raw.sort(key=lambda ab: -M[ab[0], ab[1]])
    kept: list[tuple[int, int]] = []
    for a, b in raw:
        dom = False
        for c, d in kept:
            if M[c, d] > M[a, b] and M[c, a] + M[a, d] == M[c, d] and M[c, b] + M[b, d] == M[c, d]:
                dom = True
                break
        if not dom:
            kept.append((a, b))
    pairs = sorted((int(cand[a]), int(cand[b])) for a, b in kept)
    rawp = sorted((int(cand[a]), int(cand[b])) for a, b in raw)
    meta = {"ambient_delta": fmt(params.delta), "perturbation_radius": fmt(params.tau),
            "two_delta_used": fmt(params.two_delta), "candidates": int(len(cand)),
            "raw_pairs": len(rawp), "reading": "clause 3 fails only when both perturbed points "
            "are closer than eps*Delta - 2delta to both sets"}
    return MeetingReport(params, pairs, rawp, meta)


# ---------------------------------------------------------------------------
# penetration


@dataclass
class PenetrationReport:
    one_sided_max: Fraction
    entry_offset_max: Fraction
    exit_offset_max: Fraction
    pieces: dict

    def to_json(self) -> dict:
        return {"one_sided_max": fmt(self.one_sided_max), "entry_offset_max": fmt(self.entry_offset_max),
                "exit_offset_max": fmt(self.exit_offset_max),
                "pieces": {str(k): v for k, v in sorted(self.pieces.items())}}


def penetration_diagnostics(beta: ElectricPath, gamma: Sequence[int], cs: ConedSpace, eps=0) -> PenetrationReport:
    gamma = list(gamma)
    if not gamma or beta.vertices[0] != gamma[0] or beta.vertices[-1] != gamma[-1]:
        raise InputError("paths must share endpoints")
    base = cs.base
    eu = base.units(eps)
    base_pts = [x for x in beta.vertices if x < base.n] + gamma
    dpath = base.distance_to_set(sorted(set(base_pts))).astype(np.int64)
    touched = {piece for piece, _, _ in beta.cone_visits}
    for i, p in enumerate(cs.pieces):
        if dpath[p].min() <= eu:
            touched.add(i)
    one, ent, ext = 0, 0, 0
    out = {}
    for i in sorted(touched):
        dp = base.distance_to_set(cs.pieces[i]).astype(np.int64)
        inN = dp <= eu
        cone = cs.cone(i)

        def hits(seq):
            return [x for k, x in enumerate(seq) if (x < base.n and inN[x]) or x == cone]

        def ends(seq):
            pts = [x for x in hits(seq) if x != cone]
            return (pts[0], pts[-1]) if pts else None

        hb = ends(beta.vertices)
        hg = ends(gamma)
        mask = ~inN
        if hb is None and hg is None:
            continue

        def intrinsic(a, b):
            r = base.rows([a], cols=[b], mask=mask)[0, 0]
            return int(r)

        rec = {}
        if (hb is None) != (hg is None):
            a, b = hb or hg
            L = intrinsic(a, b)
            one = max(one, L)
            rec["one_sided"] = fmt(base.value(L))
        else:
            e1 = intrinsic(hb[0], hg[0])
            e2 = intrinsic(hb[1], hg[1])
            ent, ext = max(ent, e1), max(ext, e2)
            rec["entry_offset"] = fmt(base.value(e1))
            rec["exit_offset"] = fmt(base.value(e2))
        out[i] = rec
    return PenetrationReport(base.value(one), base.value(ent), base.value(ext), out)
