"""Cone-offs, angular metrics, horoballs and embedding verdicts."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DomainError, InputError, ResourceError
from .metric import (INF, DeltaReport, MetricGraph, delta_hyperbolicity, fmt, lambda_hat,
                     quasiconvexity_constant)
from .subgroups import CosetFamily

HALF = Fraction(1, 2)
CONE_DIAMETER = 1       # any two points of one piece are within 1 through its cone
HOROBALL_BUDGET = 400_000


def _show(family, word: str) -> str:
    sub = family.subgroup
    alpha = getattr(sub, "alphabet", None) or getattr(getattr(sub, "presentation", None), "alphabet", None)
    return alpha.show(word) if alpha is not None else (word or "e")


def _pieces_of(family) -> tuple[list[np.ndarray], list[str]]:
    if family is None:
        return [], []
    if isinstance(family, CosetFamily):
        pieces, labels = family.pieces, [_show(family, r) for r in family.representatives]
    else:
        pieces = [np.asarray(sorted(set(int(x) for x in p)), dtype=np.int64) for p in family]
        labels = [str(i) for i in range(len(pieces))]
    out = []
    for i, p in enumerate(pieces):
        p = np.asarray(p, dtype=np.int64)
        if len(p) == 0:
            raise InputError(f"piece {i} ({labels[i]}) is empty")
        out.append(np.unique(p))
    return out, list(labels)


@dataclass
class ConedSpace:
    base: MetricGraph
    pieces: list[np.ndarray]
    labels: list[str]
    graph: MetricGraph  # base plus one cone vertex per piece

    @property
    def cones(self) -> list[int]:
        return [self.base.n + i for i in range(len(self.pieces))]

    def cone(self, i: int) -> int:
        return self.base.n + i

    def mask_for(self, i: int | None) -> np.ndarray | None:
        if i is None:
            return None
        m = np.zeros(self.graph.n, dtype=np.bool_)
        m[self.cone(i)] = True
        return m

    def to_json(self) -> dict:
        obj = self.graph.to_json()
        obj["cones"] = [{"piece": [int(x) for x in p], "vertex": self.cone(i), "label": self.labels[i]}
                        for i, p in enumerate(self.pieces)]
        return obj

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def electrify(base: MetricGraph, family, allow_aux: bool = False) -> ConedSpace:
    """Add a cone vertex per piece joined to the piece by edges of length 1/2."""
    pieces, labels = _pieces_of(family)
    top = base.n if allow_aux else base.n_points
    for i, p in enumerate(pieces):
        if p.min() < 0 or p.max() >= top:
            raise InputError(f"piece {i} contains a vertex that is not a base point")
    u = np.concatenate([np.full(len(p), base.n + i, np.int64) for i, p in enumerate(pieces)]) if pieces else []
    v = np.concatenate(pieces) if pieces else []
    names = [f"cone[{lab}]" for lab in labels]
    g = base.extended(len(pieces), u, v, HALF, names=names,
                      meta={"cones": len(pieces), "cone_edge": "1/2"})
    return ConedSpace(base, pieces, labels, g)


def angular_distance(cs: ConedSpace, i: int, y1: int, y2: int):
    piece = cs.pieces[i]
    if y1 not in piece or y2 not in piece:
        raise DomainError("angular distance is defined between points of the piece")
    r = cs.graph.rows([y1], cols=[y2], mask=cs.mask_for(i))[0, 0]
    return cs.graph.value(int(r))


# ---------------------------------------------------------------------------
# psi tables


@dataclass
class PsiTable:
    values: dict          # r -> Fraction | inf (raw infimum over the bucket [r, r+1))
    counts: dict          # r -> number of pairs
    witnesses: dict       # r -> (piece, y1, y2)
    max_piece_diameter: Fraction | float = 0

    def observed(self) -> list[int]:
        return sorted(self.values)

    def cumulative_min_from_above(self) -> dict:
        out, run = {}, math.inf
        for r in sorted(self.values, reverse=True):
            run = min(run, self.values[r])
            out[r] = run
        return dict(sorted(out.items()))

    def strictly_increasing(self, lo: int | None = None, hi: int | None = None) -> bool:
        rs = [r for r in self.observed() if (lo is None or r >= lo) and (hi is None or r <= hi)]
        vals = [self.values[r] for r in rs]
        for a, b in zip(vals, vals[1:]):
            if a == math.inf and b == math.inf:
                continue
            if not a < b:
                return False
        return True

    def to_json(self) -> dict:
        return {str(r): fmt(v) for r, v in sorted(self.values.items())}


def psi_table(cs: ConedSpace, within=None, pieces: Sequence[int] | None = None) -> PsiTable:
    """Infimum of the angular metric over pairs bucketed by base distance.

    ``within`` restricts every piece to a set of points (a window around the
    identity); distances are still computed in the whole graph.
    """
    allowed = _allowed(cs.base.n_points, within)
    vals: dict[int, int] = {}
    counts: dict[int, int] = {}
    wits: dict[int, tuple] = {}
    maxdiam = 0
    sb, se = cs.base.scale, cs.graph.scale
    idx = range(len(cs.pieces)) if pieces is None else pieces
    for i in idx:
        pts = cs.pieces[i][allowed[cs.pieces[i]]]
        if len(pts) < 2:
            continue
        A = cs.graph.rows(pts, cols=pts, mask=cs.mask_for(i)).astype(np.int64)
        B = cs.base.rows(pts, cols=pts).astype(np.int64)
        iu, ju = np.triu_indices(len(pts), 1)
        a, b = A[iu, ju], B[iu, ju]
        fin = b < INF
        if not fin.any():
            continue
        maxdiam = max(maxdiam, int(b[fin].max()))
        a, b, iu2, ju2 = a[fin], b[fin], iu[fin], ju[fin]
        r = b // sb
        for rv in np.unique(r):
            sel = np.flatnonzero(r == rv)
            k = sel[np.argmin(a[sel])]
            best = int(a[k])
            rv = int(rv)
            counts[rv] = counts.get(rv, 0) + len(sel)
            if rv not in vals or best < vals[rv]:
                vals[rv] = best
                wits[rv] = (int(i), int(pts[iu2[k]]), int(pts[ju2[k]]))
    values = {r: cs.graph.value(v) for r, v in sorted(vals.items())}
    return PsiTable(values, dict(sorted(counts.items())), dict(sorted(wits.items())),
                    cs.base.value(maxdiam) if maxdiam else Fraction(0))


def _allowed(n_points: int, within) -> np.ndarray:
    if within is None:
        return np.ones(n_points, dtype=bool)
    m = np.zeros(n_points, dtype=bool)
    m[np.asarray(within, dtype=np.int64)] = True
    return m


def proper_verdict(table: PsiTable, bounded_threshold=0) -> tuple[bool, str]:
    """ψ strictly increasing with final value above 3x the cone diameter, or
    every piece bounded by ``bounded_threshold`` (such families are vacuously embedded)."""
    if table.max_piece_diameter <= bounded_threshold:
        return True, "bounded pieces"
    rs = table.observed()
    if not rs:
        return True, "no pairs"
    if not table.strictly_increasing():
        return False, "psi not strictly increasing"
    if not table.values[rs[-1]] > 3 * CONE_DIAMETER:
        return False, "final psi value below threshold"
    return True, "psi increasing"


# ---------------------------------------------------------------------------
# coboundedness


@dataclass
class CoboundedReport:
    max_diameter: Fraction | float
    witness: tuple | None
    pairs: int
    dichotomy_violations: list
    thresholds: dict

    def to_json(self) -> dict:
        return {"cobounded_max": fmt(self.max_diameter), "witness": self.witness, "pairs": self.pairs,
                "dichotomy_violations": self.dichotomy_violations,
                "thresholds": {k: fmt(v) for k, v in self.thresholds.items()}}


def coboundedness(space, family=None, mode: str = "base", C=0, delta=0, slack=1, within=None,
                  max_pairs: int | None = None) -> CoboundedReport:
    """Diameters of nearest-point projections of piece j onto piece i, all ordered pairs.

    ``space`` is a ConedSpace (family taken from it) or a base MetricGraph.
    """
    if isinstance(space, ConedSpace):
        cs = space
        g = cs.graph if mode == "electric" else cs.base
        pieces = cs.pieces
    else:
        if mode == "electric":
            cs = electrify(space, family)
            g, pieces = cs.graph, cs.pieces
        else:
            g = space
            pieces, _ = _pieces_of(family)
    if mode not in ("base", "electric"):
        raise InputError(f"unknown mode {mode!r}")
    allowed = _allowed(g.n_points, within)
    clipped = [p[allowed[p]] for p in pieces]
    keep = [i for i, p in enumerate(clipped) if len(p)]
    C, delta = Fraction(C), Fraction(delta)
    thr_diam = 4 * C + 20 * delta + slack
    thr_cont = 3 * C + 10 * delta + slack
    out_thr = {"diameter": thr_diam, "containment": thr_cont}
    if len(keep) < 2:
        return CoboundedReport(Fraction(0), None, 0, [], out_thr)
    pts = np.unique(np.concatenate([clipped[i] for i in keep]))
    pos = {int(x): k for k, x in enumerate(pts)}
    M = g.submatrix(pts).astype(np.int64)
    loc = [np.array([pos[int(x)] for x in clipped[i]]) for i in range(len(clipped))]
    best, wit, count, viol = -1, None, 0, []
    du = g.units(thr_diam)
    cu = g.units(thr_cont)
    for i in keep:
        Li = loc[i]
        for j in keep:
            if i == j:
                continue
            if max_pairs is not None and count >= max_pairs:
                break
            count += 1
            Lj = loc[j]
            S = M[np.ix_(Lj, Li)]
            mins = S.min(axis=1, keepdims=True)
            proj = Li[np.any(S == mins, axis=0)]
            diam = int(M[np.ix_(proj, proj)].max()) if len(proj) else 0
            if diam > best:
                best, wit = diam, (int(i), int(j))
            if diam > du:
                reach = M[np.ix_(proj, Lj)].min(axis=1)
                if reach.max() > cu:
                    viol.append((int(i), int(j), fmt(g.value(diam))))
    return CoboundedReport(g.value(best), wit, count, viol, out_thr)


# ---------------------------------------------------------------------------
# horoballs


@dataclass
class HoroballSpace:
    graph: MetricGraph
    base_n: int
    levels: list[list[np.ndarray]]   # per piece: vertex arrays for levels 1..K
    origin: np.ndarray               # vertex -> (piece, point, level); base vertices -> (-1, v, 0)
    depth: int

    def horoball(self, i: int) -> np.ndarray:
        return np.concatenate(self.levels[i])


def horoballify(base: MetricGraph, family, K: int, budget: int = HOROBALL_BUDGET) -> HoroballSpace:
    """Glue a combinatorial horoball of depth K to every piece along level 1."""
    if K < 1:
        raise InputError("horoball depth must be at least 1")
    pieces, labels = _pieces_of(family)
    total = sum(len(p) for p in pieces) * (K - 1)
    if base.n + total > budget:
        raise ResourceError(f"horoballs need {base.n + total} vertices, over the budget of {budget}")
    us, vs = [], []
    names = []
    origin = [(-1, v, 0) for v in range(base.n)]
    levels = []
    nxt = base.n
    for i, p in enumerate(pieces):
        D = base.submatrix(p).astype(np.int64)
        lv = [p]
        for k in range(2, K + 1):
            ids = np.arange(nxt, nxt + len(p), dtype=np.int64)
            nxt += len(p)
            lv.append(ids)
            for y, vid in zip(p, ids):
                names.append(f"h[{labels[i]}]({base.names[y] if base.names else y},{k})")
                origin.append((i, int(y), k))
        levels.append(lv)
        iu, ju = np.triu_indices(len(p), 1)
        d = D[iu, ju]
        for k in range(1, K + 1):
            sel = d <= base.scale * (2 ** k)
            us.append(lv[k - 1][iu[sel]])
            vs.append(lv[k - 1][ju[sel]])
            if k < K:
                us.append(lv[k - 1])
                vs.append(lv[k])
    n_new = nxt - base.n
    u = np.concatenate(us) if us else np.zeros(0, np.int64)
    v = np.concatenate(vs) if vs else np.zeros(0, np.int64)
    g = base.extended(n_new, u, v, Fraction(1), names=names,
                      meta={"horoball_depth": K, "horizontal_rule": "level k joins pairs within 2^k"})
    return HoroballSpace(g, base.n, levels, np.array(origin, dtype=np.int64).reshape(-1, 3), K)


@dataclass
class DoubleElectrificationReport:
    lam: Fraction
    pairs: int
    seed: int
    identity_pairs: int
    identity_mismatches: list
    degenerate: bool
    depth: int

    @property
    def identity_ok(self) -> bool:
        return not self.identity_mismatches

    def to_json(self) -> dict:
        return {"lambda_hat": fmt(self.lam), "pairs": self.pairs, "seed": self.seed,
                "identity_pairs": self.identity_pairs, "identity_ok": self.identity_ok,
                "identity_mismatches": self.identity_mismatches, "degenerate": self.degenerate,
                "depth": self.depth}


def double_electrification_map(hs: HoroballSpace, n_pieces: int) -> np.ndarray:
    """Vertex map from the coned horoballification to the plain cone-off."""
    n_h = hs.graph.n
    e = np.empty(n_h + n_pieces, dtype=np.int64)
    for x in range(n_h):
        piece, y, k = hs.origin[x]
        if piece < 0:
            e[x] = x
        elif k <= 2:
            e[x] = y
        else:
            e[x] = hs.base_n + piece
    e[n_h:] = hs.base_n + np.arange(n_pieces)
    return e


def double_electrification_check(base: MetricGraph, family, K: int = 4, n: int = 200, seed: int = 0,
                                 exact_pairs: int = 50, pairs=None) -> DoubleElectrificationReport:
    """Distortion of the map from the coned horoballification to the cone-off."""
    xel = electrify(base, family)
    hs = horoballify(base, xel.pieces, K)
    hel = electrify(hs.graph, [hs.horoball(i) for i in range(len(xel.pieces))], allow_aux=True)
    e = double_electrification_map(hs, len(xel.pieces))
    scale = max(xel.graph.scale, hel.graph.scale)
    rng = np.random.default_rng(seed)
    N = hel.graph.n
    if pairs is None:
        pairs = []
        if N >= 2:
            while len(pairs) < n:
                p, q = rng.integers(0, N, size=2)
                if p != q:
                    pairs.append((int(p), int(q)))
    a_list, b_list = [], []
    fa = scale // xel.graph.scale
    fb = scale // hel.graph.scale
    for p, qs in _group(pairs).items():
        rb = hel.graph.rows([p], cols=qs)[0].astype(np.int64)
        ra = xel.graph.rows([e[p]], cols=e[qs])[0].astype(np.int64)
        a_list.append(np.where(ra >= INF, INF, ra * fa))
        b_list.append(np.where(rb >= INF, INF, rb * fb))
    a = np.concatenate(a_list) if a_list else np.zeros(0, np.int64)
    b = np.concatenate(b_list) if b_list else np.zeros(0, np.int64)
    if (a >= INF).any() or (b >= INF).any():
        lam = Fraction(10 ** 9)
    else:
        lam = lambda_hat(a, b, scale)
    # the inclusion of the cone-off is an isometry onto its image
    iota = np.concatenate([np.arange(base.n), hs.graph.n + np.arange(len(xel.pieces))])
    M = xel.graph.n
    mism = []
    checked = 0
    if M >= 2:
        ipairs = []
        while len(ipairs) < exact_pairs:
            p, q = rng.integers(0, M, size=2)
            if p != q:
                ipairs.append((int(p), int(q)))
        for p, qs in _group(ipairs).items():
            r1 = xel.graph.rows([p], cols=qs)[0]
            r2 = hel.graph.rows([iota[p]], cols=iota[qs])[0]
            for q, x, y in zip(qs, r1, r2):
                checked += 1
                if xel.graph.value(int(x)) != hel.graph.value(int(y)):
                    mism.append((p, int(q), fmt(xel.graph.value(int(x))), fmt(hel.graph.value(int(y)))))
    return DoubleElectrificationReport(lam, len(pairs), seed, checked, mism, K < 3, K)


def _group(pairs):
    out: dict[int, list[int]] = {}
    for p, q in pairs:
        out.setdefault(int(p), []).append(int(q))
    return {p: np.asarray(qs, dtype=np.int64) for p, qs in sorted(out.items())}


# ---------------------------------------------------------------------------
# embedding report


@dataclass
class EmbeddingReport:
    delta_el: DeltaReport
    psi: PsiTable
    proper: bool
    proper_reason: str
    cobounded: CoboundedReport | None
    piece_qc: dict
    meta: dict = field(default_factory=dict)

    @property
    def cobounded_max(self):
        return self.cobounded.max_diameter if self.cobounded else Fraction(0)

    def to_json(self) -> dict:
        return {
            "delta_el": self.delta_el.to_json(),
            "psi_table": self.psi.to_json(),
            "psi_cumulative_min_from_above": {str(r): fmt(v) for r, v in
                                              self.psi.cumulative_min_from_above().items()},
            "proper": self.proper,
            "proper_reason": self.proper_reason,
            "cobounded_max": fmt(self.cobounded_max),
            "cobounded": self.cobounded.to_json() if self.cobounded else None,
            "piece_qc": self.piece_qc,
            "meta": self.meta,
        }


def _sample_pairs(pts: np.ndarray, limit: int, rng) -> list[tuple[int, int]]:
    m = len(pts)
    total = m * (m - 1) // 2
    if total <= limit:
        return [(int(pts[i]), int(pts[j])) for i in range(m) for j in range(i + 1, m)]
    out = set()
    while len(out) < limit:
        i, j = sorted(rng.choice(m, size=2, replace=False))
        out.add((int(pts[i]), int(pts[j])))
    return sorted(out)


def coarse_embedding_report(base: MetricGraph, family, within=None, bounded_threshold=0,
                            delta_sample: int = 48, seed: int = 0, qc_pieces: int = 16,
                            qc_pairs: int = 120, C=0, delta=0, cobounded: bool = True,
                            max_cobounded_pairs: int | None = 200_000) -> EmbeddingReport:
    cs = family if isinstance(family, ConedSpace) else electrify(base, family)
    g = cs.graph
    allowed = _allowed(base.n_points, within)
    pool_pts = np.flatnonzero(allowed)
    cones = [cs.cone(i) for i, p in enumerate(cs.pieces) if allowed[p].any()]
    pool = np.concatenate([pool_pts, np.asarray(cones, dtype=np.int64)])
    if len(pool) <= 160:
        d_el = delta_hyperbolicity(g, "exact", points=pool)
    else:
        d_el = delta_hyperbolicity(g, "sampled", sample=delta_sample, seed=seed, points=pool)
    table = psi_table(cs, within=within)
    proper, why = proper_verdict(table, bounded_threshold)
    cob = coboundedness(cs, mode="base", C=C, delta=delta, within=within,
                        max_pairs=max_cobounded_pairs) if cobounded else None
    rng = np.random.default_rng(seed)
    qc = []
    for i, p in enumerate(cs.pieces):
        if len(qc) >= qc_pieces:
            break
        pts = p[allowed[p]]
        if len(pts) < 2:
            continue
        res = quasiconvexity_constant(g, pts, _sample_pairs(pts, qc_pairs, rng))
        qc.append({"piece": i, "label": cs.labels[i], "C": fmt(res.C), "pairs": res.pairs})
    qmax = max((Fraction(x["C"]) for x in qc), default=Fraction(0))
    meta = {"window_points": int(allowed.sum()), "pieces": len(cs.pieces),
            "cone_model": "single apex, edges 1/2", "bounded_threshold": fmt(bounded_threshold)}
    return EmbeddingReport(d_el, table, proper, why, cob, {"max": fmt(qmax), "pieces": qc}, meta)
