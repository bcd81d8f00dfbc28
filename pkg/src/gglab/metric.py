"""Finite weighted graphs as metric spaces.

Edge lengths are dyadic rationals.  Internally every length is an integer
number of ``1/scale`` units so that all arithmetic stays exact; public
accessors return :class:`fractions.Fraction` (or ``math.inf``).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import networkx as nx
import numpy as np
from scipy.sparse.csgraph import minimum_spanning_tree, shortest_path
from scipy.sparse import coo_matrix

from . import _kernels as K
from .errors import DomainError, InputError, ResourceError

INF = K.INF
FULL_MATRIX_LIMIT = 6000      # vertices; above this rows are computed on demand
ROW_CELL_BUDGET = 60_000_000  # int32 cells held at once by row helpers
DELTA_BUDGET = 2_000_000_000  # inner iterations of the exact four-point scan


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        if x.strip() == "inf":
            raise InputError("edge length cannot be infinite")
        return Fraction(x.strip())
    return Fraction(x)


def fmt(x) -> str:
    """Serialize a rational or the infinity sentinel."""
    if x is None:
        return "null"
    if x == math.inf:
        return "inf"
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def fmt_decimal(x) -> str:
    if x == math.inf:
        return "inf"
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    s = f"{float(x):.10f}".rstrip("0")
    return s


def _dyadic_scale(lengths: Iterable[Fraction]) -> int:
    scale = 1
    for q in lengths:
        d = q.denominator
        if d & (d - 1):
            raise InputError(f"edge length {q} is not dyadic")
        scale = max(scale, d)
    return scale


class MetricGraph:
    """Undirected graph with positive dyadic edge lengths.

    ``n_points`` marks a prefix of the vertex range as the underlying points
    (for example ball vertices); vertices past it are auxiliary (cone apices,
    horoball levels).
    """

    def __init__(self, n: int, u, v, w, scale: int = 1, names: Sequence[str] | None = None,
                 n_points: int | None = None, meta: dict | None = None):
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        w = np.asarray(w, dtype=np.int64)
        if len(u) and (u.min() < 0 or v.min() < 0 or max(u.max(), v.max()) >= n):
            raise InputError("edge endpoint out of range")
        if len(w) and w.min() <= 0:
            raise InputError("edge lengths must be positive")
        self.n = int(n)
        self.scale = int(scale)
        self.u, self.v, self.w = u, v, w
        self.names = list(names) if names is not None else None
        self.n_points = self.n if n_points is None else int(n_points)
        self.meta = dict(meta or {})
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        wt = np.concatenate([w, w])
        order = np.lexsort((wt, dst, src))
        src, dst, wt = src[order], dst[order], wt[order]
        # parallel edges: keep the shortest; loops never lie on geodesics
        first = np.ones(len(src), dtype=bool)
        first[1:] = (src[1:] != src[:-1]) | (dst[1:] != dst[:-1])
        first &= src != dst
        src, dst, wt = src[first], dst[first], wt[first]
        self.indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(self.indptr, src + 1, 1)
        self.indptr = np.cumsum(self.indptr)
        self.indices = dst
        self.weights = wt
        self.maxw = int(wt.max()) if len(wt) else 1
        self.uniform = bool(len(wt) == 0 or wt.min() == wt.max())
        self._matrix = None
        self._nomask = np.zeros(self.n, dtype=np.bool_)

    # construction ------------------------------------------------------
    @classmethod
    def from_edges(cls, n: int, edges, names=None, n_points=None, meta=None) -> "MetricGraph":
        edges = list(edges)
        lengths = [to_fraction(e[2]) if len(e) > 2 else Fraction(1) for e in edges]
        scale = _dyadic_scale(lengths)
        u = [e[0] for e in edges]
        v = [e[1] for e in edges]
        w = [int(q * scale) for q in lengths]
        return cls(n, u, v, w, scale, names, n_points, meta)

    def rescaled(self, scale: int) -> "MetricGraph":
        if scale % self.scale:
            raise InputError("new scale must be a multiple of the old one")
        f = scale // self.scale
        return MetricGraph(self.n, self.u, self.v, self.w * f, scale, self.names, self.n_points, self.meta)

    def extended(self, n_new: int, u, v, lengths: Sequence[Fraction] | Fraction,
                 names: Sequence[str] | None = None, meta: dict | None = None) -> "MetricGraph":
        """Append ``n_new`` auxiliary vertices and extra edges."""
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        if isinstance(lengths, (Fraction, int)):
            lengths = [Fraction(lengths)] * len(u)
        lengths = [Fraction(x) for x in lengths]
        scale = max(self.scale, _dyadic_scale(set(lengths)))
        f = scale // self.scale
        w_new = np.array([int(q * scale) for q in lengths], dtype=np.int64) if len(lengths) else np.zeros(0, np.int64)
        new_names = None
        if self.names is not None:
            new_names = self.names + (list(names) if names is not None else [f"x{self.n + i}" for i in range(n_new)])
        m = dict(self.meta)
        m.update(meta or {})
        return MetricGraph(self.n + n_new, np.concatenate([self.u, u]), np.concatenate([self.v, v]),
                           np.concatenate([self.w * f, w_new]), scale, new_names, self.n_points, m)

    def induced(self, vertices: Sequence[int]) -> tuple["MetricGraph", np.ndarray]:
        """Induced subgraph; returns it with the old-index array."""
        vs = np.asarray(sorted(set(int(x) for x in vertices)), dtype=np.int64)
        pos = np.full(self.n, -1, dtype=np.int64)
        pos[vs] = np.arange(len(vs))
        keep = (pos[self.u] >= 0) & (pos[self.v] >= 0)
        names = [self.names[i] for i in vs] if self.names is not None else None
        g = MetricGraph(len(vs), pos[self.u[keep]], pos[self.v[keep]], self.w[keep], self.scale, names,
                        int(np.sum(vs < self.n_points)), self.meta)
        return g, vs

    # unit conversion ---------------------------------------------------
    def value(self, units) -> Fraction | float:
        units = int(units)
        return math.inf if units >= INF else Fraction(units, self.scale)

    def units(self, x) -> int:
        if x == math.inf:
            return INF
        q = Fraction(x) * self.scale
        return math.floor(q)

    def edge_lengths(self):
        return [Fraction(int(x), self.scale) for x in self.w]

    # shortest paths ----------------------------------------------------
    def rows(self, sources, cols=None, mask=None, multi: bool = False) -> np.ndarray:
        """Distance rows (int32 units, INF sentinel).

        ``sources`` is a list of vertices (one run each) or, with ``multi``,
        a list of vertex groups (one multi-source run per group).
        """
        if multi:
            groups = [np.asarray(list(s), dtype=np.int64) for s in sources]
        else:
            groups = [np.asarray([s], dtype=np.int64) for s in sources]
        ptr = np.zeros(len(groups) + 1, dtype=np.int64)
        ptr[1:] = np.cumsum([len(s) for s in groups])
        srcs = np.concatenate(groups) if groups else np.zeros(0, np.int64)
        cols_a = np.zeros(0, np.int64) if cols is None else np.asarray(cols, dtype=np.int64)
        width = self.n if cols is None else len(cols_a)
        out = np.empty((len(groups), width), dtype=np.int32)
        if len(groups) == 0 or width == 0 and cols is not None:
            return out
        m = self._nomask if mask is None else mask
        K.sssp_runs(self.indptr, self.indices, self.weights, self.maxw, self.uniform, ptr, srcs, m, cols_a, out)
        return out

    def distances_from(self, source, mask=None) -> np.ndarray:
        return self.rows([source], mask=mask)[0]

    def distance_to_set(self, S, mask=None) -> np.ndarray:
        S = list(S)
        if not S:
            raise DomainError("empty set")
        return self.rows([S], mask=mask, multi=True)[0]

    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            if self.n > FULL_MATRIX_LIMIT:
                raise ResourceError(f"full distance matrix for {self.n} vertices exceeds {FULL_MATRIX_LIMIT}")
            self._matrix = self.rows(range(self.n))
        return self._matrix

    def submatrix(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.int64)
        if self._matrix is not None or self.n <= FULL_MATRIX_LIMIT:
            M = self.matrix()
            return M[np.ix_(pts, pts)]
        out = np.empty((len(pts), len(pts)), dtype=np.int32)
        step = max(1, ROW_CELL_BUDGET // max(len(pts), 1))
        for a in range(0, len(pts), step):
            out[a:a + step] = self.rows(pts[a:a + step], cols=pts)
        return out

    def dist_units(self, a: int, b: int) -> int:
        if self._matrix is not None:
            return int(self._matrix[a, b])
        return int(self.rows([a], cols=[b])[0, 0])

    def dist(self, a: int, b: int):
        return self.value(self.dist_units(a, b))

    def neighbors(self, x: int):
        s, e = self.indptr[x], self.indptr[x + 1]
        return self.indices[s:e], self.weights[s:e]

    def components(self) -> np.ndarray:
        from scipy.sparse.csgraph import connected_components
        A = coo_matrix((np.ones(len(self.u)), (self.u, self.v)), shape=(self.n, self.n))
        return connected_components(A, directed=False)[1]

    def nx(self) -> nx.Graph:
        G = nx.Graph()
        G.add_nodes_from(range(self.n))
        G.add_weighted_edges_from(zip(self.u.tolist(), self.v.tolist(), self.w.tolist()))
        return G

    # serialization ------------------------------------------------------
    def to_json(self) -> dict:
        names = self.names if self.names is not None else [str(i) for i in range(self.n)]
        edges = [[int(a), int(b), fmt_decimal(Fraction(int(c), self.scale))]
                 for a, b, c in zip(self.u, self.v, self.w)]
        meta = dict(self.meta)
        meta["n_points"] = self.n_points
        return {"vertices": names, "edges": edges, "meta": meta}

    @classmethod
    def from_json(cls, obj: dict) -> "MetricGraph":
        names = obj["vertices"]
        meta = dict(obj.get("meta", {}))
        n_points = meta.pop("n_points", None)
        return cls.from_edges(len(names), [(e[0], e[1], e[2]) for e in obj["edges"]],
                              names=names, n_points=n_points, meta=meta)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


# ---------------------------------------------------------------------------
# metric operations


def gromov_product(g: MetricGraph, x: int, y: int, w: int) -> Fraction:
    r = g.rows([w], cols=[x, y])[0].astype(np.int64)
    dxy = g.dist_units(x, y)
    if r.max() >= INF or dxy >= INF:
        raise DomainError("gromov product of points in different components")
    return Fraction(int(r[0] + r[1] - dxy), 2 * g.scale)


@dataclass
class DeltaReport:
    delta4: Fraction
    mode: str
    witness: tuple
    count: int = 0
    seed: int | None = None
    blocks: int = 1
    lower_bound: bool = False
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"delta4": fmt(self.delta4), "kind": "four-point", "mode": self.mode,
                "lower_bound": self.lower_bound, "count": self.count, "seed": self.seed,
                "blocks": self.blocks, "witness": list(self.witness), "meta": self.meta}


def four_point(D, x, y, z, w) -> int:
    """Twice the four-point value of a quadruple, in the units of D."""
    s = sorted([int(D[x][y]) + int(D[z][w]), int(D[x][z]) + int(D[y][w]), int(D[x][w]) + int(D[y][z])])
    return s[2] - s[1]


def _scan_matrix(D: np.ndarray, budget: int):
    m = D.shape[0]
    if m < 4:
        return 0, (), 0, True
    iu, ju = np.triu_indices(m, 1)
    d = D[iu, ju].astype(np.int64)
    order = np.argsort(-d, kind="stable")
    best, wit, it, done = K.delta_scan(np.ascontiguousarray(D, dtype=np.int64), iu[order].astype(np.int64),
                                       ju[order].astype(np.int64), budget)
    return int(best), tuple(int(x) for x in wit), int(it), bool(done)


def delta_hyperbolicity(g: MetricGraph, mode: str = "exact", sample: int = 64, seed: int = 0,
                        points: Sequence[int] | None = None, budget: int = DELTA_BUDGET) -> DeltaReport:
    """Four-point hyperbolicity constant.

    Exact mode splits the graph into biconnected blocks (the constant of a
    graph is the maximum over its blocks) and scans each block with early
    exit.  Sampled mode scans every quadruple of a seeded vertex sample and
    reports a lower bound.
    """
    if mode not in ("exact", "sampled"):
        raise InputError(f"unknown delta mode {mode!r}")
    if g.n == 0:
        return DeltaReport(Fraction(0), mode, ())
    if points is None and len(set(g.components().tolist())) > 1:
        raise DomainError("delta_hyperbolicity needs a connected graph")
    if mode == "sampled":
        pool = np.arange(g.n) if points is None else np.asarray(sorted(set(points)), dtype=np.int64)
        rng = np.random.default_rng(seed)
        k = min(sample, len(pool))
        pick = np.sort(rng.choice(pool, size=k, replace=False)) if k else pool
        D = g.submatrix(pick)
        best, wit, it, _ = _scan_matrix(D, 1 << 62)
        wv = tuple(int(pick[i]) for i in wit) if wit else ()
        return DeltaReport(Fraction(best, 2 * g.scale), "sampled", wv, count=k, seed=seed,
                           lower_bound=True)
    if points is not None:
        pts = np.asarray(sorted(set(points)), dtype=np.int64)
        blocks = [pts]
    else:
        G = nx.Graph()
        G.add_nodes_from(range(g.n))
        G.add_edges_from(zip(g.u.tolist(), g.v.tolist()))
        blocks = [np.asarray(sorted(b), dtype=np.int64) for b in nx.biconnected_components(G) if len(b) >= 4]
    best, wit, total = 0, (), 0
    for b in sorted(blocks, key=lambda a: (-len(a), a[0])):
        if len(b) > FULL_MATRIX_LIMIT:
            raise ResourceError(f"block of {len(b)} vertices is beyond the exact budget; use sampled mode")
        if points is None:
            sub, idx = g.induced(b)
            D = sub.submatrix(np.arange(sub.n))
        else:
            idx = b
            D = g.submatrix(b)
        val, w, it, done = _scan_matrix(D, budget - total)
        total += it
        if not done:
            raise ResourceError(f"exact four-point scan exceeded the budget of {budget} steps; use sampled mode")
        if w and (not wit or val > best):
            best, wit = val, tuple(int(idx[i]) for i in w)
    return DeltaReport(Fraction(best, 2 * g.scale), "exact", wit, count=total, blocks=len(blocks))


@dataclass
class GeodesicSet:
    endpoints: tuple
    interval: frozenset
    length: Fraction


def geodesic_interval(g: MetricGraph, u: int, v: int) -> GeodesicSet:
    r = g.rows([u, v]).astype(np.int64)
    t = r[0, v]
    if t >= INF:
        raise DomainError("endpoints lie in different components")
    inter = np.flatnonzero(r[0] + r[1] == t)
    return GeodesicSet((u, v), frozenset(int(x) for x in inter), g.value(t))


def nearest_point_projection(g: MetricGraph, B, x: int) -> frozenset:
    B = np.asarray(sorted(set(B)), dtype=np.int64)
    if len(B) == 0:
        raise DomainError("projection onto an empty set")
    r = g.rows([x], cols=B)[0]
    m = r.min()
    if m >= INF:
        raise DomainError("point not connected to the target set")
    return frozenset(int(b) for b in B[r == m])


@dataclass
class QCResult:
    C: Fraction
    witness: tuple | None  # (x, y, w)
    pairs: int


def _pair_rows(g: MetricGraph, pts: np.ndarray):
    """Yield (chunk_points, rows) so that memory stays bounded."""
    step = max(1, ROW_CELL_BUDGET // max(g.n, 1))
    for a in range(0, len(pts), step):
        chunk = pts[a:a + step]
        yield chunk, g.rows(chunk)


def interval_maxima(g: MetricGraph, pairs: Sequence[tuple[int, int]], key: np.ndarray):
    """For each pair (x, y): max of ``key`` over the geodesic interval and a vertex attaining it."""
    pairs = [(int(a), int(b)) for a, b in pairs]
    if not pairs:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    key = np.asarray(key, dtype=np.int64)
    pts = np.asarray(sorted({p for ab in pairs for p in ab}), dtype=np.int64)
    best = np.full(len(pairs), -1, np.int64)
    arg = np.full(len(pairs), -1, np.int64)
    if len(pts) * g.n <= ROW_CELL_BUDGET:
        rows = g.rows(pts)
        pos = {int(p): i for i, p in enumerate(pts)}
        ia = np.array([pos[a] for a, _ in pairs], np.int64)
        ib = np.array([pos[b] for _, b in pairs], np.int64)
        target = rows[ia, np.array([b for _, b in pairs])].astype(np.int64)
        return K.interval_scan(rows.astype(np.int64), ia, ib, target, key)
    # fall back to per-pair rows
    for k, (a, b) in enumerate(pairs):
        rows = g.rows([a, b]).astype(np.int64)
        bb, aa = K.interval_scan(rows, np.array([0]), np.array([1]), np.array([rows[0, b]]), key)
        best[k], arg[k] = bb[0], aa[0]
    return best, arg


def quasiconvexity_constant(g: MetricGraph, Q, pair_domain=None) -> QCResult:
    """Max distance to Q from points on any geodesic joining a pair of the domain."""
    Q = sorted(set(int(q) for q in Q))
    if not Q:
        raise DomainError("empty set")
    if pair_domain is None:
        pair_domain = [(a, b) for i, a in enumerate(Q) for b in Q[i + 1:]]
    pair_domain = list(pair_domain)
    dq = g.distance_to_set(Q).astype(np.int64)
    best, arg = interval_maxima(g, pair_domain, dq)
    if len(pair_domain) == 0 or best.max() < 0:
        return QCResult(Fraction(0), None, len(pair_domain))
    k = int(np.argmax(best))
    x, y = pair_domain[k]
    return QCResult(g.value(int(best[k])), (x, y, int(arg[k])), len(pair_domain))


def coarse_path_metric(g: MetricGraph, Y, D) -> np.ndarray:
    """Shortest paths in the graph on Y joining points at distance <= D (units, INF sentinel)."""
    Y = np.asarray(list(Y), dtype=np.int64)
    M = g.submatrix(Y).astype(np.int64)
    return _coarse_from_matrix(M, g.units(D))


def _coarse_from_matrix(M: np.ndarray, Du: int) -> np.ndarray:
    m = M.shape[0]
    if m == 0:
        return M
    A = np.where((M <= Du) & (M > 0), M, 0).astype(float)
    S = shortest_path(A, method="D", directed=False)
    out = np.where(np.isinf(S), INF, S).astype(np.int64)
    np.fill_diagonal(out, 0)
    return out


def bottleneck_constant(M: np.ndarray) -> int:
    """Smallest D (units) making a point set D-coarsely connected: max MST edge."""
    m = M.shape[0]
    if m <= 1:
        return 0
    if (M >= INF).any():
        return INF
    T = minimum_spanning_tree(np.where(M > 0, M, 0).astype(float))
    return int(T.max()) if T.nnz else 0


@dataclass
class UndistortionResult:
    ok: bool
    lam: Fraction | None
    witness: tuple | None


def lambda_hat(a: np.ndarray, b: np.ndarray, scale: int) -> Fraction:
    """Least quarter-grid λ >= 1 with b/λ - λ <= a <= λ b + λ for all pairs (units)."""
    a = np.asarray(a, np.int64).ravel()
    b = np.asarray(b, np.int64).ravel()
    if len(a) == 0:
        return Fraction(1)
    s = scale
    af, bf = a / s, b / s
    lo1 = np.max(af / (bf + 1))
    lo2 = np.max((-af + np.sqrt(af * af + 4 * bf)) / 2)
    q = max(4, int(math.floor(4 * max(lo1, lo2, 1.0))) - 1)
    while True:
        # exact integer checks with λ = q/4
        c1 = np.all(4 * a <= q * (b + s))
        c2 = np.all(16 * b - s * q * q <= 4 * q * a)
        if c1 and c2:
            return Fraction(q, 4)
        q += 1


def undistortion_check(g: MetricGraph, Y, D, lam_max) -> UndistortionResult:
    Y = np.asarray(list(Y), dtype=np.int64)
    M = g.submatrix(Y).astype(np.int64)
    DY = _coarse_from_matrix(M, g.units(D))
    bad = np.argwhere(DY >= INF)
    if len(bad):
        i, j = bad[0]
        return UndistortionResult(False, None, (int(Y[i]), int(Y[j])))
    iu, ju = np.triu_indices(len(Y), 1)
    lam = lambda_hat(DY[iu, ju], M[iu, ju], g.scale)
    return UndistortionResult(lam <= Fraction(lam_max), lam, None)


def thickenings(g: MetricGraph, sets, radius) -> list[np.ndarray]:
    """Point vertices within ``radius`` of each set (depth-limited multi-source search)."""
    sets = [np.asarray(list(s), dtype=np.int64) for s in sets]
    if not sets:
        return []
    lim = g.units(radius)
    if lim < 0:
        return [np.zeros(0, np.int64) for _ in sets]
    ptr = np.zeros(len(sets) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(s) for s in sets])
    srcs = np.concatenate(sets)
    p, verts, _ = K.local_balls(g.indptr, g.indices, g.weights, g.maxw, ptr, srcs, lim, g.n_points)
    return [np.sort(verts[p[i]:p[i + 1]]) for i in range(len(sets))]
