"""Finite balls in Cayley graphs."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InputError, ResourceError
from .metric import MetricGraph, delta_hyperbolicity, DeltaReport
from .presentation import Presentation, Strategy, dehn_reduce
from .words import free_reduce, inverse

DEFAULT_BUDGET = 200_000


def vertex_budget(budget: int | None = None) -> int:
    if budget is not None:
        return int(budget)
    env = os.environ.get("GGLAB_BUDGET")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise InputError(f"GGLAB_BUDGET must be an integer, got {env!r}") from exc
    return DEFAULT_BUDGET


@dataclass
class CayleyBall:
    presentation: Presentation
    radius: int
    vertices: list[str]
    edges: np.ndarray  # (m, 3): i, j, generator index; j = i * generator
    safe_radius: int
    delta: DeltaReport | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.index = {w: i for i, w in enumerate(self.vertices)}
        self.lengths = np.array([len(w) for w in self.vertices], dtype=np.int64)

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def center(self) -> str:
        return ""

    @cached_property
    def graph(self) -> MetricGraph:
        return MetricGraph(self.n, self.edges[:, 0], self.edges[:, 1], np.ones(len(self.edges), np.int64),
                           1, names=[self.presentation.alphabet.show(w) for w in self.vertices],
                           meta={"kind": "cayley-ball", "radius": self.radius})

    def within(self, r: int) -> np.ndarray:
        return np.flatnonzero(self.lengths <= r)

    def locate(self, word: str) -> int | None:
        """Index of the vertex equal to ``word`` in the group, or None if outside the ball."""
        p = self.presentation
        nf = p.normal_form(word)
        if nf is not None:
            return self.index.get(nf)
        w = free_reduce(word)
        if w in self.index:
            return self.index[w]
        return self._dehn_lookup(w)

    def _dehn_lookup(self, w: str):
        buckets = self._buckets
        p = self.presentation
        red = dehn_reduce(w, p)
        if red in self.index:
            return self.index[red]
        for i in buckets.get(p.bucket(w), ()):
            if dehn_reduce(inverse(self.vertices[i]) + red, p) == "":
                return i
        return None

    @cached_property
    def _buckets(self) -> dict:
        out: dict[tuple, list[int]] = {}
        for i, w in enumerate(self.vertices):
            out.setdefault(self.presentation.bucket(w), []).append(i)
        return out

    def word(self, i: int) -> str:
        return self.vertices[i]

    def restrict(self, r: int) -> "CayleyBall":
        """The radius-r ball as the induced sub-ball (indices are preserved as a prefix)."""
        if r > self.radius:
            raise InputError("cannot restrict to a larger radius")
        keep = self.lengths <= r
        n = int(keep.sum())  # vertices are in shortlex order, so this is a prefix
        e = self.edges[(self.edges[:, 0] < n) & (self.edges[:, 1] < n)]
        safe = min(r, self.safe_radius) if self.presentation.strategy != Strategy.DEHN else \
            _safe_radius(self.presentation, r, self.delta)
        return CayleyBall(self.presentation, r, self.vertices[:n], e, safe, self.delta, dict(self.meta))

    # serialization -------------------------------------------------------
    def to_json(self) -> dict:
        gens = self.presentation.alphabet.generators
        return {
            "radius": self.radius,
            "presentation": self.presentation.to_text(),
            "strategy": self.presentation.strategy.value,
            "vertices": list(self.vertices),
            "edges": [[int(i), int(j), gens[int(g)]] for i, j, g in self.edges],
            "safe_radius": self.safe_radius,
            "delta4": None if self.delta is None else self.delta.to_json(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, obj: dict, presentation: Presentation | None = None) -> "CayleyBall":
        p = presentation or Presentation.parse(obj["presentation"])
        gens = p.alphabet.generators
        edges = np.array([[e[0], e[1], gens.index(e[2])] for e in obj["edges"]], dtype=np.int64).reshape(-1, 3)
        return cls(p, int(obj["radius"]), list(obj["vertices"]), edges, int(obj["safe_radius"]))


def _safe_radius(p: Presentation, R: int, delta: DeltaReport | None) -> int:
    if p.strategy != Strategy.DEHN:
        return R
    d = delta.delta4 if delta is not None else 0
    return max(0, int((R - 4 * d) // 2))


def build_ball(p: Presentation, R: int, budget: int | None = None, delta_mode: str = "auto") -> CayleyBall:
    """Breadth-first enumeration of the radius-R ball in shortlex normal forms."""
    if R < 0:
        raise InputError("radius must be nonnegative")
    budget = vertex_budget(budget)
    alpha = p.alphabet
    symbols = alpha.symbols
    ngen = len(alpha.generators)
    vertices = [""]
    index = {"": 0}
    layers = [[0]]
    edges: list[tuple[int, int, int]] = []
    buckets: dict[tuple, list[int]] = {p.bucket(""): [0]}
    dehn = p.strategy == Strategy.DEHN

    def find(word: str, k: int):
        # k = length of the vertex the candidate was grown from
        if not dehn:
            nf = p.normal_form(word)
            return nf, index.get(nf)
        w = free_reduce(word)
        if w in index:
            return w, index[w]
        for i in buckets.get(p.bucket(w), ()):
            if abs(len(vertices[i]) - k) <= 1 and dehn_reduce(inverse(vertices[i]) + w, p) == "":
                return w, i
        return w, None

    for k in range(R + 1):
        nxt = []
        for vi in layers[k]:
            v = vertices[vi]
            for si, s in enumerate(symbols):
                nf, j = find(v + s, k)
                if j is None:
                    if k == R or len(nf) != k + 1:
                        # outside the ball (or a longer representative of a known element)
                        continue
                    j = len(vertices)
                    if j >= budget:
                        raise ResourceError(f"ball of radius {R} exceeds the vertex budget of {budget}"
                                            " (set GGLAB_BUDGET to raise it)")
                    vertices.append(nf)
                    index[nf] = j
                    nxt.append(j)
                    if dehn:
                        buckets.setdefault(p.bucket(nf), []).append(j)
                if si < ngen:
                    edges.append((vi, j, si))
        layers.append(nxt)
    E = np.array(edges, dtype=np.int64).reshape(-1, 3)
    # an edge vi--j with generator s is also discovered from j with s^-1 when j is
    # processed; keep one copy per generator edge (the one found with the generator)
    ball = CayleyBall(p, R, vertices, E, R)
    if dehn:
        ball.delta = _ball_delta(ball, delta_mode)
        ball.safe_radius = _safe_radius(p, R, ball.delta)
        ball.meta["safe_radius_certified"] = (not ball.delta.lower_bound) or ball.safe_radius == 0
    return ball


def _ball_delta(ball: CayleyBall, mode: str) -> DeltaReport:
    g = ball.graph
    lb = delta_hyperbolicity(g, "sampled", sample=min(48, g.n), seed=0)
    if 4 * lb.delta4 >= ball.radius or mode == "sampled":
        # the lower bound already forces safe radius 0 (or sampling was requested)
        return lb
    try:
        return delta_hyperbolicity(g, "exact")
    except ResourceError:
        return lb
