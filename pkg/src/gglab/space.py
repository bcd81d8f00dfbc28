"""The metric space (G, d) on a ball: the Cayley graph, optionally with cyclic cosets coned off."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .ball import CayleyBall, build_ball
from .electrics import electrify
from .errors import ResourceError
from .metric import DeltaReport, MetricGraph, delta_hyperbolicity
from .presentation import Presentation, Strategy
from .subgroups import coset_pieces, make_subgroup
from .words import inverse


@dataclass
class GroupSpace:
    """Ball vertices with the metric d.

    Without an ``electrify`` line in the presentation d is the word metric.
    With one, every coset of each listed cyclic subgroup meeting the ball in
    at least two points is coned off (cone edges 1/2).
    """

    ball: CayleyBall
    graph: MetricGraph

    @classmethod
    def of(cls, ball: CayleyBall) -> "GroupSpace":
        p = ball.presentation
        if not p.electrify:
            return cls(ball, ball.graph)
        pieces, reps = [], []
        for g in p.electrify:
            fam = coset_pieces(make_subgroup(p, [g]), ball)
            pieces += fam.pieces
            reps += [f"{p.alphabet.show(r)}<{g}>" for r in fam.representatives]
        cs = electrify(ball.graph, pieces)
        g = cs.graph
        g.names = ball.graph.names + [f"cone[{r}]" for r in reps]
        g.meta = dict(g.meta, kind="electrified-cayley-ball", electrify=list(p.electrify))
        return cls(ball, g)

    @classmethod
    def build(cls, p: Presentation, R: int, budget: int | None = None) -> "GroupSpace":
        return cls.of(build_ball(p, R, budget))

    @property
    def presentation(self) -> Presentation:
        return self.ball.presentation

    @property
    def n(self) -> int:
        return self.ball.n

    @property
    def radius(self) -> int:
        return self.ball.radius

    @property
    def safe_radius(self) -> int:
        return self.ball.safe_radius

    def window(self, r: int | None = None) -> np.ndarray:
        return self.ball.within(self.safe_radius if r is None else r)

    def restrict(self, r: int) -> "GroupSpace":
        return GroupSpace.of(self.ball.restrict(r))

    def word_bound(self, i: int, j: int) -> int:
        """Length of a word for x_i^-1 x_j; an upper bound for d(x_i, x_j) between safe points."""
        p = self.presentation
        return len(p.reduce(inverse(self.ball.vertices[i]) + self.ball.vertices[j]))

    def translation_key(self, pts) -> tuple:
        """Canonical form of a vertex set up to left translation, anchored at its shortlex-least point."""
        pts = sorted(int(x) for x in pts)
        if not pts:
            return ()
        p = self.presentation
        x0 = inverse(self.ball.vertices[pts[0]])
        words = []
        for x in pts:
            w = p.reduce(x0 + self.ball.vertices[x])
            if p.strategy == Strategy.DEHN:
                j = self.ball.locate(w)
                w = self.ball.vertices[j] if j is not None else w
            words.append(w)
        return tuple(sorted(words, key=p.alphabet.key))

    @cached_property
    def delta(self) -> DeltaReport:
        """Four-point constant of (G, d) on the ball: exact when affordable, else a sampled lower bound."""
        if self.ball.delta is not None and self.graph is self.ball.graph:
            return self.ball.delta
        try:
            return delta_hyperbolicity(self.graph, "exact")
        except ResourceError:
            pass
        return delta_hyperbolicity(self.graph, "sampled", sample=64, seed=0)
