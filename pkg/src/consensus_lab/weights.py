"""Row-stochastic weight matrices paired with graph sequences.

Builders produce matrices whose positive entries sit exactly on the graph
edges plus the diagonal.  :func:`verify_compliance` certifies which level of
structural conditions a sequence meets and extracts the uniform positivity
bound ``beta`` together with the spanning trees that witness it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import DiGraph, GraphSequence, SpanningTree, bfs_spanning_tree, roots

ROW_SUM_TOL = 1e-12
COLUMN_SUM_TOL = 1e-12

SCHEMES = ("equal-neighbor", "lazy-metropolis", "laplacian", "quarter", "custom")


class GammaTooSmall(ValueError):
    pass


class AsymmetricGraph(ValueError):
    pass


class NotThreeRegular(ValueError):
    pass


@dataclass(frozen=True)
class RowStochasticMatrix:
    """Dense nonnegative matrix whose rows each sum to 1 within 1e-12."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("expected a square matrix")
        if (a < 0).any():
            raise ValueError("entries must be nonnegative")
        err = np.abs(a.sum(axis=1) - 1.0).max()
        if err > ROW_SUM_TOL:
            raise ValueError(f"row sums off by {err:.3e} > {ROW_SUM_TOL}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    def is_doubly_stochastic(self, tol: float = COLUMN_SUM_TOL) -> bool:
        return bool(np.abs(self.entries.sum(axis=0) - 1.0).max() <= tol)

    def to_json_dict(self) -> dict:
        return {"m": self.m, "rows": [list(map(float, row)) for row in self.entries]}

    @staticmethod
    def from_json_dict(d: dict) -> "RowStochasticMatrix":
        return RowStochasticMatrix(np.array(d["rows"], dtype=float))


def _absorb_row_residue(a: np.ndarray) -> np.ndarray:
    # The diagonal is positive in every scheme here, so it can take the
    # rounding residue without changing the sparsity pattern.
    resid = 1.0 - a.sum(axis=1)
    a[np.diag_indices_from(a)] += resid
    return a


def equal_neighbor_weights(g: DiGraph) -> RowStochasticMatrix:
    """Each agent averages uniformly over its in-neighbors and itself."""
    a = g.in_adjacency() + np.eye(g.m)
    a /= a.sum(axis=1, keepdims=True)
    return RowStochasticMatrix(_absorb_row_residue(a))


def laplacian_weights(g: DiGraph, gamma: float) -> RowStochasticMatrix:
    """``I - L/gamma`` for the graph Laplacian ``L``; needs ``gamma > m``.

    Requires a symmetric edge set since the Laplacian scheme models
    bidirectional exchange; the result is then doubly stochastic.
    """
    if gamma <= g.m:
        raise GammaTooSmall(f"gamma={gamma} must exceed m={g.m}")
    if not g.is_symmetric:
        raise AsymmetricGraph("laplacian weights need a symmetric edge set")
    a = g.in_adjacency() / gamma
    deg = np.array([g.in_degree(i) for i in range(g.m)], dtype=float)
    a[np.diag_indices_from(a)] = 1.0 - deg / gamma
    return RowStochasticMatrix(_absorb_row_residue(a))


def regular_quarter_weights(g: DiGraph) -> RowStochasticMatrix:
    """Weight 1/4 on the diagonal and every edge of a 3-regular symmetric graph."""
    if not g.is_symmetric:
        raise NotThreeRegular("quarter weights need a symmetric edge set")
    if any(g.degree(i) != 3 for i in range(g.m)):
        raise NotThreeRegular("every node must have degree exactly 3")
    a = 0.25 * (g.in_adjacency() + np.eye(g.m))
    return RowStochasticMatrix(a)


def lazy_metropolis_weights(g: DiGraph) -> RowStochasticMatrix:
    """Lazy Metropolis weights: ``1/(2 max(deg_i, deg_j))`` on edges, rest on the diagonal.

    The 1/2 laziness keeps the diagonal at least 1/2; symmetry of the
    off-diagonal entries makes the matrix doubly stochastic.
    """
    if not g.is_symmetric:
        raise AsymmetricGraph("lazy metropolis weights need a symmetric edge set")
    m = g.m
    deg = [g.degree(i) for i in range(m)]
    a = np.zeros((m, m))
    for j, i in g.edges:
        a[i, j] = 1.0 / (2.0 * max(deg[i], deg[j]))
    a[np.diag_indices_from(a)] = 1.0 - a.sum(axis=1)
    return RowStochasticMatrix(a)


_BUILDERS = {
    "equal-neighbor": lambda g, p: equal_neighbor_weights(g),
    "lazy-metropolis": lambda g, p: lazy_metropolis_weights(g),
    "laplacian": lambda g, p: laplacian_weights(g, p["gamma"]),
    "quarter": lambda g, p: regular_quarter_weights(g),
}


def _support_graph(a: np.ndarray) -> DiGraph:
    m = a.shape[0]
    edges = {(int(j), int(i)) for i in range(m) for j in range(m) if i != j and a[i, j] > 0.0}
    return DiGraph(m, frozenset(edges))


@dataclass(frozen=True)
class MatrixSequence:
    """Time-indexed row-stochastic matrices; ``matrix_at(t)`` defined for every ``t >= 0``.

    Scheme-based sequences derive each matrix from the paired graph
    sequence.  Custom sequences cycle an explicit list of matrices; their
    graphs are the positive off-diagonal support.
    """

    scheme: str
    graph_seq: GraphSequence | None = None
    params: dict = field(default_factory=dict)
    matrices: tuple = ()
    _prebuilt: tuple = field(default=(), repr=False, compare=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @staticmethod
    def from_scheme(graph_seq: GraphSequence, scheme: str, **params) -> "MatrixSequence":
        if scheme not in _BUILDERS:
            raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
        prebuilt: tuple = ()
        if graph_seq.kind in ("static", "periodic"):
            prebuilt = tuple(_BUILDERS[scheme](g, params) for g in graph_seq.graphs)
        return MatrixSequence(scheme=scheme, graph_seq=graph_seq, params=dict(params),
                              _prebuilt=prebuilt)

    @staticmethod
    def custom(matrices, graph_seq: GraphSequence | None = None) -> "MatrixSequence":
        mats = tuple(m if isinstance(m, RowStochasticMatrix) else RowStochasticMatrix(m)
                     for m in matrices)
        if not mats:
            raise ValueError("custom sequence needs at least one matrix")
        if any(m.m != mats[0].m for m in mats):
            raise ValueError("all matrices must share m")
        return MatrixSequence(scheme="custom", graph_seq=graph_seq, matrices=mats)

    @property
    def m(self) -> int:
        if self.graph_seq is not None:
            return self.graph_seq.m
        return self.matrices[0].m

    def graph_at(self, t: int) -> DiGraph:
        if self.graph_seq is not None:
            return self.graph_seq.graph_at(t)
        return _support_graph(self.matrix_at(t))

    def matrix_at(self, t: int) -> np.ndarray:
        if t < 0:
            raise ValueError("t must be >= 0")
        if self.scheme == "custom":
            return self.matrices[t % len(self.matrices)].entries
        if self._prebuilt:
            return self._prebuilt[t % len(self._prebuilt)].entries
        a = self._cache.get(t)
        if a is None:
            a = _BUILDERS[self.scheme](self.graph_seq.graph_at(t), self.params).entries
            self._cache[t] = a
        return a


@dataclass(frozen=True)
class ComplianceReport:
    """Outcome of the structural checks over an initial horizon.

    ``level`` is ``"strong"`` when every graph is strongly connected and all
    its edges carry positive weight, ``"rooted"`` when positive weight is
    only guaranteed on a rooted spanning tree per step, and ``"neither"``
    on the first violation (recorded in ``violation``).  ``beta`` is the
    minimum over diagonal entries and tree-edge weights across the horizon.
    """

    level: str
    beta: float
    doubly_stochastic: bool
    trees: tuple
    p_star: int
    horizon: int
    violation: str | None = None

    @property
    def ok(self) -> bool:
        return self.level != "neither"


def verify_compliance(seq: MatrixSequence, horizon: int) -> ComplianceReport:
    """Check row-stochasticity, positive diagonals, rootedness, and edge compliance.

    Scans ``t = 0 .. horizon-1``.  Strong-level compliance additionally
    needs strong connectivity and positive weight on every graph edge;
    rooted-level compliance needs positive weight on the deterministic BFS
    tree from the smallest-index root.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    strong_ok = True
    rooted_ok = True
    violation: str | None = None
    beta = np.inf
    doubly = True
    trees: list[SpanningTree] = []

    def note(msg: str):
        nonlocal violation
        if violation is None:
            violation = msg

    for t in range(horizon):
        a = seq.matrix_at(t)
        g = seq.graph_at(t)
        if (a < 0).any() or np.abs(a.sum(axis=1) - 1.0).max() > ROW_SUM_TOL:
            note(f"t={t}: matrix is not row-stochastic")
            strong_ok = rooted_ok = False
            break
        diag = np.diag(a)
        if diag.min() <= 0.0:
            note(f"t={t}: diagonal entry {int(diag.argmin())} is not positive")
            strong_ok = rooted_ok = False
            break
        doubly = doubly and bool(np.abs(a.sum(axis=0) - 1.0).max() <= COLUMN_SUM_TOL)

        root_set = roots(g)
        if not root_set:
            note(f"t={t}: graph is not rooted")
            strong_ok = rooted_ok = False
            break
        tree = bfs_spanning_tree(g, min(root_set))
        tree_entries = np.array([a[i, j] for j, i in tree.edges()]) if g.m > 1 else np.array([])
        if tree_entries.size and tree_entries.min() <= 0.0:
            j, i = tree.edges()[int(tree_entries.argmin())]
            note(f"t={t}: zero weight on tree edge ({j},{i})")
            rooted_ok = False
            strong_ok = False
            break
        trees.append(tree)
        beta = min(beta, float(diag.min()))
        if tree_entries.size:
            beta = min(beta, float(tree_entries.min()))

        if strong_ok:
            if len(root_set) != g.m:
                strong_ok = False
            else:
                edge_entries = [a[i, j] for j, i in g.edges]
                if edge_entries and min(edge_entries) <= 0.0:
                    strong_ok = False

    if not rooted_ok:
        return ComplianceReport(level="neither", beta=0.0, doubly_stochastic=doubly,
                                trees=tuple(trees), p_star=0, horizon=horizon,
                                violation=violation)
    level = "strong" if strong_ok else "rooted"
    p_star = max(tree.depth for tree in trees) if trees else 0
    return ComplianceReport(level=level, beta=float(beta), doubly_stochastic=doubly,
                            trees=tuple(trees), p_star=max(p_star, 1), horizon=horizon,
                            violation=None)
