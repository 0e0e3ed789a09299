"""Simple undirected graphs and the set combinatorics behind the stability checks.

Vertices are integers ``0..n-1``.  Besides basic structure (adjacency,
traversal, 2-coloring) the module provides exact enumeration of independent
sets, an exact branch-and-bound search for the independent set with maximum
arrival deficit, and a reproducible Erdos-Renyi sampler.

The deficit search is intentionally exact rather than heuristic: the
stability verdict built on top of it is a strict inequality over all
independent sets, and an approximate maximizer could corrupt it.  Worst-case
cost is exponential; the intended scale is sparse graphs with up to a few
dozen vertices.
"""

from __future__ import annotations

import math
from collections import deque
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import InputError

__all__ = [
    "Graph",
    "neighborhood",
    "is_bipartite",
    "odd_cycle",
    "is_connected",
    "is_independent",
    "independent_sets",
    "max_deficit",
    "erdos_renyi",
]


class Graph:
    """Finite simple undirected graph on vertices ``0..n-1``.

    Edges are normalized to ``(i, j)`` with ``i < j``, deduplicated and kept
    sorted; ``adj[v]`` is the frozen neighbor set of ``v``.  Instances are
    immutable and safe to share across threads and processes.
    """

    __slots__ = ("n", "edges", "adj")

    def __init__(self, n: int, edges: Iterable[Sequence[int]] = ()):
        if n < 1:
            raise InputError(f"graph needs at least one vertex, got n={n}")
        normalized = set()
        for e in edges:
            i, j = int(e[0]), int(e[1])
            if i == j:
                raise InputError(f"self-loop at vertex {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise InputError(f"edge ({i},{j}) out of range for n={n}")
            normalized.add((i, j) if i < j else (j, i))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", tuple(sorted(normalized)))
        adj = [set() for _ in range(n)]
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        object.__setattr__(self, "adj", tuple(frozenset(s) for s in adj))

    def __setattr__(self, name, value):
        raise AttributeError("Graph is immutable")

    def __reduce__(self):
        # rebuild through __init__ so pickling works despite the setattr guard
        return (Graph, (self.n, self.edges))

    def __eq__(self, other):
        return isinstance(other, Graph) and self.n == other.n and self.edges == other.edges

    def __hash__(self):
        return hash((self.n, self.edges))

    def __repr__(self):
        return f"Graph(n={self.n}, edges={list(self.edges)!r})"

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, data: dict) -> "Graph":
        try:
            return cls(int(data["n"]), data.get("edges", []))
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed graph object: {exc}") from exc


def _check_vertices(g: Graph, vs: Iterable[int]) -> list[int]:
    out = []
    for v in vs:
        v = int(v)
        if not 0 <= v < g.n:
            raise InputError(f"vertex {v} out of range for n={g.n}")
        out.append(v)
    return out


def neighborhood(g: Graph, a: Iterable[int]) -> frozenset[int]:
    """Vertices adjacent to at least one element of ``a`` (empty for empty ``a``)."""
    vs = _check_vertices(g, a)
    out: set[int] = set()
    for v in vs:
        out |= g.adj[v]
    return frozenset(out)


def is_bipartite(g: Graph) -> tuple[bool, tuple[frozenset[int], frozenset[int]] | None]:
    """2-colorability test; returns one bipartition when it exists.

    Isolated vertices are assigned to the first side.
    """
    color = [-1] * g.n
    for root in range(g.n):
        if color[root] >= 0:
            continue
        color[root] = 0
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for w in g.adj[v]:
                if color[w] < 0:
                    color[w] = 1 - color[v]
                    queue.append(w)
                elif color[w] == color[v]:
                    return False, None
    side0 = frozenset(v for v in range(g.n) if color[v] == 0)
    side1 = frozenset(v for v in range(g.n) if color[v] == 1)
    return True, (side0, side1)


def odd_cycle(g: Graph) -> list[int] | None:
    """Return the vertex sequence of an odd cycle, or None when bipartite.

    The cycle is extracted from the first conflicting edge met by the BFS
    2-coloring: joining the two BFS-tree paths behind a same-color edge
    yields a closed odd walk, which is then trimmed at the lowest common
    ancestor to a simple odd cycle.
    """
    color = [-1] * g.n
    parent = [-1] * g.n
    for root in range(g.n):
        if color[root] >= 0:
            continue
        color[root] = 0
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for w in g.adj[v]:
                if color[w] < 0:
                    color[w] = 1 - color[v]
                    parent[w] = v
                    queue.append(w)
                elif color[w] == color[v]:
                    path_v, path_w = [v], [w]
                    seen = {v: 0}
                    p = v
                    while parent[p] >= 0:
                        p = parent[p]
                        seen[p] = len(path_v)
                        path_v.append(p)
                    p = w
                    while p not in seen:
                        p = parent[p]
                        path_w.append(p)
                    cycle = path_v[: seen[p] + 1] + path_w[-2::-1]
                    return cycle
    return None


def is_connected(g: Graph) -> bool:
    """Connectivity via breadth-first traversal from vertex 0."""
    seen = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w in g.adj[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == g.n


def is_independent(g: Graph, s: Iterable[int]) -> bool:
    """True when no two vertices of ``s`` are adjacent."""
    vs = set(_check_vertices(g, s))
    return all(not (g.adj[v] & vs) for v in vs)


def independent_sets(g: Graph, within: Iterable[int] | None = None) -> Iterator[frozenset[int]]:
    """Yield every nonempty independent subset of ``within`` (default: all vertices).

    Enumeration order is depth-first over increasing vertex indices, so it is
    deterministic.  The count is exponential in general; callers are expected
    to stay at small-graph scale.
    """
    base = sorted(set(range(g.n)) if within is None else set(_check_vertices(g, within)))

    def rec(current: list[int], candidates: list[int]) -> Iterator[frozenset[int]]:
        for k, v in enumerate(candidates):
            chosen = current + [v]
            yield frozenset(chosen)
            rest = [u for u in candidates[k + 1 :] if u not in g.adj[v]]
            if rest:
                yield from rec(chosen, rest)

    yield from rec([], base)


def max_deficit(
    g: Graph, lam: Sequence[float], s: Iterable[int]
) -> tuple[float, frozenset[int] | None]:
    """Maximize ``lam(I) - lam(N(I))`` over nonempty independent subsets ``I`` of ``s``.

    ``N(I)`` is the neighborhood in the whole graph.  Returns the exact
    maximum and one maximizing set.  When ``s`` is empty there is nothing to
    maximize over and the result is the vacuous sentinel ``(-inf, None)``.

    Search is depth-first branch and bound: a partial set ``I`` with
    remaining candidates ``C`` is abandoned when even the optimistic value
    ``lam(I) + lam(C) - lam(N(I))`` (candidates contribute their full rate
    and no new neighbor cost) cannot beat the incumbent.
    """
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (g.n,):
        raise InputError(f"lam must have length {g.n}, got shape {lam.shape}")
    if not np.all(np.isfinite(lam)) or np.any(lam <= 0.0):
        raise InputError("arrival intensities must be strictly positive and finite")
    base = sorted(set(_check_vertices(g, s)))
    if not base:
        return -math.inf, None

    adj = g.adj
    best = -math.inf
    best_set: frozenset[int] | None = None

    def rec(chosen: list[int], lam_in: float, nbhd: frozenset[int], lam_nb: float,
            candidates: list[int]) -> None:
        nonlocal best, best_set
        cand_mass = float(lam[candidates].sum()) if candidates else 0.0
        if lam_in + cand_mass - lam_nb <= best:
            return
        for k, v in enumerate(candidates):
            new_nb = adj[v] - nbhd
            lam_in2 = lam_in + float(lam[v])
            lam_nb2 = lam_nb + float(lam[sorted(new_nb)].sum()) if new_nb else lam_nb
            value = lam_in2 - lam_nb2
            if value > best:
                best = value
                best_set = frozenset(chosen + [v])
            rest = [u for u in candidates[k + 1 :] if u not in adj[v]]
            if rest:
                rec(chosen + [v], lam_in2, nbhd | adj[v], lam_nb2, rest)
            cand_mass -= float(lam[v])
            if lam_in + cand_mass - lam_nb <= best:
                return

    rec([], 0.0, frozenset(), 0.0, base)
    return best, best_set


def erdos_renyi(n: int, p: float, rng: np.random.Generator) -> Graph:
    """G(n, p) sample, reproducible bit-exactly from the generator state.

    Vertex pairs are visited in lexicographic order and each consumes exactly
    one uniform draw, so a given generator state always yields the same graph.
    """
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    if not 0.0 <= p <= 1.0:
        raise InputError(f"p must be in [0, 1], got {p}")
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    draws = rng.random(len(pairs))
    return Graph(n, [pair for pair, u in zip(pairs, draws) if u < p])
