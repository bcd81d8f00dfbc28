"""Graded hierarchy of electrified metrics and the graded relative hyperbolicity verdict."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .electrics import ConedSpace, EmbeddingReport, coarse_embedding_report, electrify
from .errors import ResourceError
from .height import (AlgebraicWitness, GeometricIntersection, algebraic_height, geometric_height)
from .metric import INF, bottleneck_constant, fmt, quasiconvexity_constant
from .space import GroupSpace
from .subgroups import CoreGraph, conjugate, coset_pieces, orbit_points
from .words import inverse

PIECE_BUDGET = 200_000


# ---------------------------------------------------------------------------
# representatives and level metrics


def conjugacy_representatives(witnesses, space: GroupSpace | None = None) -> list:
    """One representative per conjugacy class (free mode) or translation class (vertex sets).

    Free mode takes AlgebraicWitness or CoreGraph items and returns CoreGraphs
    rebased to their least signature; vertex-set mode needs ``space`` and
    returns one index array per class.
    """
    items = list(witnesses)
    if not items:
        return []
    first = items[0]
    if isinstance(first, (AlgebraicWitness, CoreGraph)):
        classes: dict = {}
        for w in items:
            cg = w.intersection if isinstance(w, AlgebraicWitness) else w
            sig, u = cg.conjugacy_signature()
            if sig not in classes:
                classes[sig] = conjugate(cg, inverse(u))
        return [classes[s] for s in sorted(classes)]
    if space is None:
        raise ValueError("vertex-set representatives need the space")
    classes = {}
    for w in items:
        J = w.J if isinstance(w, GeometricIntersection) else np.asarray(w, dtype=np.int64)
        key = space.translation_key(J)
        if key not in classes:
            classes[key] = np.asarray(sorted(int(x) for x in J), dtype=np.int64)
    return [classes[k] for k in sorted(classes, key=lambda k: (len(k), [space.presentation.alphabet.key(w)
                                                                        for w in k]))]


def level_family(space: GroupSpace, reps) -> tuple[list[np.ndarray], list[str]]:
    """All cosets of the representative subgroups meeting the ball in two or more points."""
    pieces, labels, seen = [], [], set()
    for k, h in enumerate(reps):
        fam = coset_pieces(h, space.ball)
        for r, p in zip(fam.representatives, fam.pieces):
            key = p.tobytes()
            if key in seen:
                continue
            seen.add(key)
            pieces.append(p)
            labels.append(f"{space.presentation.alphabet.show(r)}K{k + 1}")
            if len(pieces) > PIECE_BUDGET:
                raise ResourceError(f"level family exceeds the piece budget of {PIECE_BUDGET}")
    return pieces, labels


def build_level_metric(space: GroupSpace, reps=None, pieces=None) -> ConedSpace:
    """d_i: the space with every piece of the level family coned off (d itself when empty)."""
    if pieces is None:
        pieces, _ = level_family(space, reps or [])
    return electrify(space.graph, pieces)


# ---------------------------------------------------------------------------
# verdict


@dataclass
class GradedLevelReport:
    level: int
    family_size: int
    representatives: list
    embedding: EmbeddingReport
    path_connected: Fraction | float
    path_cap: Fraction
    notices: list = field(default_factory=list)

    @property
    def verdict(self) -> bool:
        e = self.embedding
        return bool(e.proper and e.delta_el.delta4 != float("inf") and self.path_connected <= self.path_cap)

    def to_json(self) -> dict:
        return {"level": self.level, "family_size": self.family_size,
                "representatives": self.representatives, "embedding": self.embedding.to_json(),
                "path_connected": fmt(self.path_connected), "path_cap": fmt(self.path_cap),
                "verdict": self.verdict, "notices": self.notices}


@dataclass
class GradedVerdict:
    height: int | str
    levels: list
    finite_height: bool
    truncated: list
    provenance: dict

    @property
    def overall(self) -> bool:
        return self.finite_height and all(lv.verdict for lv in self.levels)

    @property
    def status(self) -> str:
        if self.overall:
            return "true"
        return "false" if not self.truncation_only else "truncated"

    @property
    def truncation_only(self) -> bool:
        """False verdict caused only by a level cap, not by a failing check."""
        return (not self.overall and self.finite_height and all(lv.verdict for lv in self.levels)
                and bool(self.truncated))

    def to_json(self) -> dict:
        return {"height": self.height, "levels": [lv.to_json() for lv in self.levels],
                "overall": self.overall, "finite_height": self.finite_height,
                "truncated": self.truncated, "provenance": self.provenance}


def _path_constant(space: GroupSpace, pieces, window, limit: int) -> Fraction:
    """Largest MST bottleneck in (G, d) over the first ``limit`` pieces clipped to the window."""
    g = space.graph
    inside = np.zeros(space.n, dtype=np.bool_)
    inside[window] = True
    worst = 0
    done = 0
    for p in pieces:
        q = p[inside[p]]
        if len(q) < 2:
            continue
        worst = max(worst, bottleneck_constant(g.submatrix(q).astype(np.int64)))
        done += 1
        if done >= limit:
            break
    return g.value(worst) if worst < INF else float("inf")


def graded_verdict(space: GroupSpace, subgroup, mode: str = "auto", L: int = 6, n_max: int = 6,
                   B=None, window: int | None = None, path_cap=None, seed: int = 0,
                   max_levels: int = 8, qc_pieces: int = 16, path_pieces: int = 32,
                   delta_sample: int = 48) -> GradedVerdict:
    """Level-by-level check of the hierarchy CH_0 = {G}, CH_1 = cosets of H, CH_i = i-fold intersections.

    For i = 1..height+1, CH_{i-1} must be coarsely hyperbolically embedded in
    (G, d_i) and CH_i must be coarsely path connected in (G, d).
    """
    if mode == "auto":
        mode = "algebraic" if isinstance(subgroup, CoreGraph) else "geometric"
    safe = space.safe_radius
    B = Fraction(2 * safe, 10) if B is None else Fraction(B)
    W = max(1, safe // 2) if window is None else int(window)
    cap = Fraction(max(1, safe // 2)) if path_cap is None else Fraction(path_cap)
    win = space.window(min(W, safe))
    truncated: list[str] = []
    prov = {"mode": mode, "R": space.radius, "safe_radius": safe, "window": W, "B": fmt(B),
            "path_cap": fmt(cap), "seed": seed}

    # families CH_1..CH_n as (pieces, readable representatives)
    fams: list[tuple[list[np.ndarray], list]] = []
    if mode == "algebraic":
        rep = algebraic_height(subgroup, L, n_max)
        n = rep.height
        finite = rep.exhaustive
        height = rep.height_label
        prov.update({"L": L, "n_max": n_max, "exhaustive": rep.exhaustive})
        if not finite:
            truncated.append(f"algebraic height search incomplete at L={L}, n_max={n_max}")
        for i in range(1, n + 1):
            reps = [subgroup] if i == 1 else conjugacy_representatives(rep.witnesses.get(i, []))
            pieces, _ = level_family(space, reps)
            fams.append((pieces, [r.generators() for r in reps]))
    else:
        now = geometric_height(space, subgroup, B)
        n = now.height
        height = n
        prov["height_by_radius"] = {str(space.radius): n}
        finite = True
        if space.radius >= 3:
            smaller = space.restrict(space.radius - 2)
            before = geometric_height(smaller, subgroup, B)
            prov["height_by_radius"][str(smaller.radius)] = before.height
            same_shapes = before.shapes(smaller) == now.shapes(space)
            prov["shapes_stable"] = same_shapes
            if before.height != n or not same_shapes:
                finite = False
                truncated.append(f"non-stabilizing height: {before.height} at R={smaller.radius}, "
                                 f"{n} at R={space.radius}")
        else:
            truncated.append("radius too small to compare heights")
        if n >= 1:
            pieces, _ = level_family(space, [subgroup])
            fams.append((pieces, [subgroup.generators()]))
        for i in range(2, n + 1):
            Js = [w.J for w in now.witnesses if w.level == i]
            uniq, seen = [], set()
            for J in Js:
                if J.tobytes() not in seen:
                    seen.add(J.tobytes())
                    uniq.append(J)
            fams.append((uniq, [[int(x) for x in r] for r in conjugacy_representatives(uniq, space)]))

    top = n + 1
    if top > max_levels:
        truncated.append(f"level loop capped at {max_levels} of {top}")
        top = max_levels
    all_points = [np.arange(space.n, dtype=np.int64)]
    levels = []
    for i in range(1, top + 1):
        cur = fams[i - 1][0] if i <= len(fams) else []
        reps = fams[i - 1][1] if i <= len(fams) else []
        prev = all_points if i == 1 else fams[i - 2][0]
        d_i = electrify(space.graph, cur)
        emb = coarse_embedding_report(d_i.graph, prev, within=win, bounded_threshold=B,
                                      delta_sample=delta_sample, seed=seed, qc_pieces=qc_pieces,
                                      cobounded=False)
        D = _path_constant(space, cur, win, path_pieces) if cur else Fraction(0)
        levels.append(GradedLevelReport(i, len(cur), reps, emb, D, cap))
    return GradedVerdict(height, levels, finite, truncated, prov)


# ---------------------------------------------------------------------------
# round trip


@dataclass
class RoundTrip:
    qc: Fraction
    qc_cap: Fraction
    qc_witness: tuple | None
    graded: GradedVerdict
    properness: dict
    meta: dict = field(default_factory=dict)

    @property
    def quasiconvex(self) -> bool:
        return self.qc <= self.qc_cap

    @property
    def agree(self) -> bool:
        return self.quasiconvex == self.graded.overall

    def to_json(self) -> dict:
        return {"quasiconvexity": {"C": fmt(self.qc), "cap": fmt(self.qc_cap), "positive": self.quasiconvex,
                                   "witness": self.qc_witness},
                "graded": self.graded.to_json(), "graded_positive": self.graded.overall,
                "properness": self.properness, "agree": self.agree,
                "record": "agreement" if self.agree else "disagreement: escalate the radius", "meta": self.meta}


def roundtrip_theorem_check(space: GroupSpace, subgroup, qc_pairs: int = 400, centers: int = 32,
                            radii=(1, 2, 3), seed: int = 0, **graded_kw) -> RoundTrip:
    """Quasiconvexity of the orbit against the graded verdict, with a uniform properness table."""
    g = space.graph
    rng = np.random.default_rng(seed)
    safe = space.safe_radius
    win = space.window()
    O = orbit_points(subgroup, space.ball)
    O = O[np.isin(O, win)]
    m = len(O)
    if m * (m - 1) // 2 <= qc_pairs:
        pairs = [(int(O[i]), int(O[j])) for i in range(m) for j in range(i + 1, m)]
    else:
        seen = set()
        while len(seen) < qc_pairs:
            i, j = sorted(rng.choice(m, size=2, replace=False))
            seen.add((int(O[i]), int(O[j])))
        pairs = sorted(seen)
    qc = quasiconvexity_constant(g, O, pairs) if m else None
    C = qc.C if qc else Fraction(0)
    cap = Fraction(max(2, safe // 2))
    # orbit points per ball of radius D0 around sampled centers
    # half the centers on the orbit (where balls are fullest), half anywhere in the window
    k1 = min(centers // 2, len(O))
    k2 = min(centers - k1, len(win))
    cen = np.unique(np.concatenate([rng.choice(O, size=k1, replace=False) if k1 else O[:0],
                                    rng.choice(win, size=k2, replace=False) if k2 else win[:0]]))
    k = len(cen)
    rows = g.rows(cen, cols=O).astype(np.int64) if len(O) else np.zeros((k, 0), np.int64)
    table = {str(D0): int((rows <= g.units(D0)).sum(axis=1).max()) if k else 0 for D0 in radii}
    verdict = graded_verdict(space, subgroup, seed=seed, **graded_kw)
    meta = {"orbit_points": int(m), "pairs": len(pairs), "centers": int(k), "seed": seed}
    return RoundTrip(C, cap, qc.witness if qc else None, verdict,
                     {"max_orbit_points": table}, meta)
