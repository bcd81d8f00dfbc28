"""Independent reference computations used by the tests.

Nothing here imports the package's algorithms: distances come from networkx,
group elements from naive word manipulation.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

import networkx as nx


def reduce_word(w: str) -> str:
    out = []
    for s in w:
        if out and out[-1] == s.swapcase():
            out.pop()
        else:
            out.append(s)
    return "".join(out)


def inv(w: str) -> str:
    return w[::-1].swapcase()


def free_words(gens: str, R: int) -> list[str]:
    """All reduced words of length <= R over gens and their inverses."""
    letters = list(gens) + [g.upper() for g in gens]
    out = [""]
    layer = [""]
    for _ in range(R):
        layer = [w + s for w in layer for s in letters if not (w and w[-1] == s.swapcase())]
        out += layer
    return out


def tree_distance(u: str, v: str) -> int:
    return len(reduce_word(inv(u) + v))


def subgroup_elements(gens, max_len: int, slack: int = 6) -> set[str]:
    """Reduced words of length <= max_len in the subgroup generated by gens.

    Products are grown breadth first while the reduced length stays below
    max_len + slack (enough for the Nielsen-reduced fixtures used here).
    """
    moves = [g for g in gens if g] + [inv(g) for g in gens if g]
    seen = {""}
    frontier = [""]
    cap = max_len + slack
    while frontier:
        nxt = []
        for w in frontier:
            for m in moves:
                x = reduce_word(w + m)
                if len(x) <= cap and x not in seen:
                    seen.add(x)
                    nxt.append(x)
        frontier = nxt
    return {w for w in seen if len(w) <= max_len}


def nx_graph(n: int, edges) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(range(n))
    for e in edges:
        w = Fraction(e[2]) if len(e) > 2 else Fraction(1)
        if G.has_edge(e[0], e[1]):
            w = min(w, G[e[0]][e[1]]["weight"])
        G.add_edge(int(e[0]), int(e[1]), weight=w)
    return G


def all_pairs(G: nx.Graph) -> dict:
    return dict(nx.all_pairs_dijkstra_path_length(G, weight="weight"))


def brute_delta(D, pts) -> Fraction:
    """Four-point constant by enumerating every quadruple."""
    best = Fraction(0)
    for x, y, z, w in itertools.combinations(pts, 4):
        s = sorted([D[x][y] + D[z][w], D[x][z] + D[y][w], D[x][w] + D[y][z]])
        best = max(best, Fraction(s[2] - s[1]) / 2)
    return best


def cayley_graph_edges(vertices: list[str], gens: str, equal) -> list[tuple[int, int]]:
    """Edges x -- x*g between listed vertices, using a supplied word-equality test."""
    out = []
    for i, x in enumerate(vertices):
        for g in gens:
            for j, y in enumerate(vertices):
                if equal(x + g, y):
                    out.append((i, j))
    return out


def z2_coned_distance(p, q) -> int | Fraction:
    """Distance in Z^2 = <a, t> with every vertical line (t-coset) coned off (edges 1/2).

    Inside an unbounded lattice: horizontal steps cost 1, and changing height
    costs min(|dy|, 1) by crossing one cone.
    """
    dx = abs(p[0] - q[0])
    dy = abs(p[1] - q[1])
    return dx + min(dy, 1)
