"""Directed communication graphs, rootedness, and spanning trees.

Nodes are ``0..m-1``.  An edge ``(j, i)`` means node ``j`` sends to node
``i``.  Self-loops are never stored: every agent implicitly hears itself,
and the weight builders account for that on the matrix diagonal.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .seeding import substream


class NotRooted(ValueError):
    """The requested root does not reach every node of the graph."""


@dataclass(frozen=True)
class DiGraph:
    """Immutable directed graph on ``m`` nodes with edge set ``{(sender, receiver)}``."""

    m: int
    edges: frozenset

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("graph needs at least one node")
        edges = frozenset((int(j), int(i)) for j, i in self.edges)
        object.__setattr__(self, "edges", edges)
        for j, i in edges:
            if j == i:
                raise ValueError(f"self-loop ({j},{i}) must stay implicit")
            if not (0 <= j < self.m and 0 <= i < self.m):
                raise ValueError(f"edge ({j},{i}) out of range for m={self.m}")

    @cached_property
    def _out(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.m)]
        for j, i in self.edges:
            out[j].append(i)
        return tuple(tuple(sorted(v)) for v in out)

    @cached_property
    def _in(self) -> tuple[tuple[int, ...], ...]:
        inc: list[list[int]] = [[] for _ in range(self.m)]
        for j, i in self.edges:
            inc[i].append(j)
        return tuple(tuple(sorted(v)) for v in inc)

    def out_neighbors(self, j: int) -> tuple[int, ...]:
        return self._out[j]

    def in_neighbors(self, i: int) -> tuple[int, ...]:
        return self._in[i]

    def in_degree(self, i: int) -> int:
        return len(self._in[i])

    @cached_property
    def is_symmetric(self) -> bool:
        return all((i, j) in self.edges for j, i in self.edges)

    def degree(self, i: int) -> int:
        """Undirected degree; only meaningful for symmetric edge sets."""
        if not self.is_symmetric:
            raise ValueError("degree is defined for symmetric graphs only")
        return len(self._out[i])

    def in_adjacency(self) -> np.ndarray:
        """Matrix ``M`` with ``M[i, j] = 1`` iff ``j`` sends to ``i``; zero diagonal."""
        a = np.zeros((self.m, self.m))
        for j, i in self.edges:
            a[i, j] = 1.0
        return a

    def to_json_dict(self) -> dict:
        """Serialization with 1-based node ids and lexicographically sorted edges."""
        return {"m": self.m, "edges": [[j + 1, i + 1] for j, i in sorted(self.edges)]}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @staticmethod
    def from_json_dict(d: dict) -> "DiGraph":
        return DiGraph(int(d["m"]), frozenset((int(j) - 1, int(i) - 1) for j, i in d["edges"]))


@dataclass(frozen=True)
class SpanningTree:
    """Rooted directed spanning tree; ``parents[v]`` is the tree parent, ``-1`` at the root."""

    root: int
    parents: tuple[int, ...]
    depth: int

    def __post_init__(self):
        if self.parents[self.root] != -1:
            raise ValueError("root must have parent -1")
        if sum(1 for p in self.parents if p == -1) != 1:
            raise ValueError("exactly one root expected")

    @property
    def m(self) -> int:
        return len(self.parents)

    def edges(self) -> tuple[tuple[int, int], ...]:
        """Tree edges as (parent, child) pairs; there are exactly m-1 of them."""
        return tuple((p, v) for v, p in enumerate(self.parents) if p >= 0)


def roots(g: DiGraph) -> frozenset[int]:
    """All nodes with a directed path to every other node; empty if none exist.

    Uses Kosaraju's two-pass strongly-connected-component decomposition:
    the graph is rooted exactly when the condensation has a unique source
    component, and every node of that component is a root.
    """
    m = g.m
    seen = [False] * m
    order: list[int] = []
    for s in range(m):
        if seen[s]:
            continue
        seen[s] = True
        stack = [(s, iter(g.out_neighbors(s)))]
        while stack:
            u, it = stack[-1]
            v = next(it, None)
            if v is None:
                order.append(u)
                stack.pop()
            elif not seen[v]:
                seen[v] = True
                stack.append((v, iter(g.out_neighbors(v))))

    comp = [-1] * m
    ncomp = 0
    for s in reversed(order):
        if comp[s] != -1:
            continue
        comp[s] = ncomp
        work = [s]
        while work:
            u = work.pop()
            for v in g.in_neighbors(u):
                if comp[v] == -1:
                    comp[v] = ncomp
                    work.append(v)
        ncomp += 1

    has_incoming = [False] * ncomp
    for j, i in g.edges:
        if comp[j] != comp[i]:
            has_incoming[comp[i]] = True
    sources = [c for c in range(ncomp) if not has_incoming[c]]
    if len(sources) != 1:
        return frozenset()
    return frozenset(v for v in range(m) if comp[v] == sources[0])


def bfs_spanning_tree(g: DiGraph, root: int) -> SpanningTree:
    """Breadth-first spanning tree from ``root``.

    The parent of a node discovered at level ``k+1`` is its smallest-index
    in-neighbor at level ``k``, so identical graphs always yield identical
    trees.  The tree depth equals the eccentricity of ``root``.
    """
    m = g.m
    dist = [-1] * m
    dist[root] = 0
    q: deque[int] = deque([root])
    while q:
        u = q.popleft()
        for v in g.out_neighbors(u):
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                q.append(v)
    unreachable = [v for v in range(m) if dist[v] < 0]
    if unreachable:
        raise NotRooted(f"node {unreachable[0]} is unreachable from {root}")
    parents = [-1] * m
    for v in range(m):
        if v == root:
            continue
        parents[v] = min(u for u in g.in_neighbors(v) if dist[u] == dist[v] - 1)
    return SpanningTree(root=root, parents=tuple(parents), depth=max(dist))


def regular_tree_graph(d: int) -> DiGraph:
    """Cubic graph on ``2**d`` nodes built from a complete binary tree.

    Node 0 is an auxiliary root joined to the binary-tree root; nodes
    ``1..2**d - 1`` hold the tree in heap order.  The leaves are joined
    left-to-right by a path, and the two outer leaves are joined to node 0,
    so every node ends with degree exactly 3.  Each undirected edge is
    stored as two directed edges.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    und: set[tuple[int, int]] = {(0, 1)}
    for v in range(1, 2 ** (d - 1)):
        und.add((v, 2 * v))
        und.add((v, 2 * v + 1))
    leaves = list(range(2 ** (d - 1), 2 ** d))
    for a, b in zip(leaves, leaves[1:]):
        und.add((a, b))
    und.add((0, leaves[0]))
    und.add((0, leaves[-1]))
    edges = {(a, b) for a, b in und} | {(b, a) for a, b in und}
    return DiGraph(2 ** d, frozenset(edges))


def random_rooted_graph(m: int, extra_edge_prob: float = 0.0, seed=0) -> DiGraph:
    """Random rooted digraph: a random recursive tree plus independent extra edges.

    The root is chosen uniformly; with ``extra_edge_prob=0`` the result has
    exactly ``m-1`` edges, with ``extra_edge_prob=1`` it is the complete
    digraph without self-loops.  Always rooted by construction.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    root = int(rng.integers(m))
    others = [v for v in range(m) if v != root]
    others = [others[i] for i in rng.permutation(len(others))]
    placed = [root]
    edges: set[tuple[int, int]] = set()
    for v in others:
        parent = placed[int(rng.integers(len(placed)))]
        edges.add((parent, v))
        placed.append(v)
    if extra_edge_prob > 0.0:
        mask = rng.random((m, m)) < extra_edge_prob
        for j, i in np.argwhere(mask):
            if j != i:
                edges.add((int(j), int(i)))
    return DiGraph(m, frozenset(edges))


@dataclass(frozen=True)
class GraphSequence:
    """Time-indexed rooted graphs: ``graph_at(t)`` is defined for every ``t >= 0``.

    Finite data extends by cycling (static/periodic kinds) or by per-step
    seeded regeneration (random-rooted kind), so adjoint windows may look
    arbitrarily far past any simulation horizon.
    """

    kind: str
    m: int
    graphs: tuple = ()
    seed: int = 0
    extra_edge_prob: float = 0.0
    horizon: int | None = field(default=None, compare=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @staticmethod
    def static(graph: DiGraph) -> "GraphSequence":
        if not roots(graph):
            raise NotRooted("static graph is not rooted")
        return GraphSequence(kind="static", m=graph.m, graphs=(graph,))

    @staticmethod
    def periodic(graphs) -> "GraphSequence":
        graphs = tuple(graphs)
        if not graphs:
            raise ValueError("periodic sequence needs at least one graph")
        for idx, g in enumerate(graphs):
            if not roots(g):
                raise NotRooted(f"graph at position {idx} is not rooted")
            if g.m != graphs[0].m:
                raise ValueError("all graphs in a sequence must share m")
        return GraphSequence(kind="periodic", m=graphs[0].m, graphs=graphs)

    @staticmethod
    def random_rooted(m: int, extra_edge_prob: float, seed: int) -> "GraphSequence":
        return GraphSequence(kind="random-rooted", m=m, seed=int(seed),
                             extra_edge_prob=float(extra_edge_prob))

    def graph_at(self, t: int) -> DiGraph:
        if t < 0:
            raise ValueError("t must be >= 0")
        if self.kind in ("static", "periodic"):
            return self.graphs[t % len(self.graphs)]
        if self.kind == "random-rooted":
            g = self._cache.get(t)
            if g is None:
                g = random_rooted_graph(self.m, self.extra_edge_prob,
                                        substream(self.seed, "graph", t))
                self._cache[t] = g
            return g
        raise ValueError(f"unknown graph sequence kind {self.kind!r}")
