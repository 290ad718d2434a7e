"""Immutable CSR graph, edge-list ingestion and shared structural utilities."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, TextIO

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

log = logging.getLogger(__name__)


class GraphFormatError(ValueError):
    """Malformed edge-list input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConvergenceError(RuntimeError):
    """Power iteration failed to converge; ``estimate`` holds the last iterate."""

    def __init__(self, message: str, estimate):
        super().__init__(message)
        self.estimate = estimate


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class Graph:
    """Simple graph stored as compressed out-adjacency.

    Node ids are dense integers ``0..n-1``. Undirected graphs store every
    edge in both directions with the same weight. Instances are never
    mutated after construction, so they can be shared between workers.

    Use :meth:`from_edges` to build one from an arbitrary edge iterable;
    the constructor expects already-simplified CSR arrays.
    """

    def __init__(self, indptr, indices, weights=None, *, directed=False,
                 weighted=None, labels=None):
        indptr = np.asarray(indptr, dtype=np.int64)
        indices = np.asarray(indices, dtype=np.int64)
        if weights is None:
            weights = np.ones(len(indices), dtype=np.float64)
        weights = np.asarray(weights, dtype=np.float64)
        if len(weights) != len(indices):
            raise ValueError("weights and indices differ in length")
        if len(weights) and weights.min() <= 0:
            raise ValueError("edge weights must be positive")
        self.indptr = _frozen(indptr)
        self.indices = _frozen(indices)
        self.weights = _frozen(weights)
        self.directed = bool(directed)
        self.weighted = bool(weighted) if weighted is not None else bool(np.any(weights != 1.0))
        self.labels = list(labels) if labels is not None else None
        if self.labels is not None and len(self.labels) != self.node_count:
            raise ValueError("labels must have one entry per node")
        self.dropped_self_loops = 0
        self.dropped_duplicates = 0

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence], *, directed=False,
                   weighted=False, labels=None) -> "Graph":
        """Build a simplified graph from ``(u, v)`` or ``(u, v, w)`` tuples.

        Self-loops are dropped. A repeated edge keeps its first weight;
        for undirected graphs ``(v, u)`` repeats ``(u, v)``.
        """
        seen: dict[tuple[int, int], float] = {}
        loops = dups = 0
        for e in edges:
            u, v = int(e[0]), int(e[1])
            w = float(e[2]) if weighted and len(e) > 2 else 1.0
            if not (0 <= u < n and 0 <= v < n):
                raise IndexError(f"edge ({u}, {v}) references a node outside 0..{n - 1}")
            if w <= 0:
                raise ValueError(f"edge ({u}, {v}) has non-positive weight {w}")
            if u == v:
                loops += 1
                continue
            key = (u, v) if directed or u < v else (v, u)
            if key in seen:
                dups += 1
                continue
            seen[key] = w
        if seen:
            arr = np.array(list(seen.keys()), dtype=np.int64)
            src, dst = arr[:, 0], arr[:, 1]
            wts = np.fromiter(seen.values(), dtype=np.float64, count=len(seen))
        else:
            src = dst = np.empty(0, dtype=np.int64)
            wts = np.empty(0, dtype=np.float64)
        if not directed:
            src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
            wts = np.concatenate([wts, wts])
        g = cls._from_arcs(n, src, dst, wts, directed=directed, weighted=weighted, labels=labels)
        g.dropped_self_loops = loops
        g.dropped_duplicates = dups
        return g

    @classmethod
    def _from_arcs(cls, n, src, dst, wts, **kw) -> "Graph":
        order = np.lexsort((dst, src))
        src, dst, wts = src[order], dst[order], wts[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(indptr, dst, wts, **kw)

    # -- basic accessors -------------------------------------------------

    @property
    def node_count(self) -> int:
        return len(self.indptr) - 1

    def __len__(self) -> int:
        return self.node_count

    @property
    def arc_count(self) -> int:
        return len(self.indices)

    @property
    def edge_count(self) -> int:
        return self.arc_count if self.directed else self.arc_count // 2

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def edge_weights(self, v: int) -> np.ndarray:
        return self.weights[self.indptr[v]:self.indptr[v + 1]]

    @cached_property
    def degree(self) -> np.ndarray:
        """Out-degree (undirected: degree) of every node."""
        return _frozen(np.diff(self.indptr))

    @cached_property
    def strength(self) -> np.ndarray:
        """Sum of outgoing edge weights per node."""
        s = np.bincount(self.arc_sources, weights=self.weights, minlength=self.node_count)
        return _frozen(s.astype(np.float64))

    @cached_property
    def arc_sources(self) -> np.ndarray:
        return _frozen(np.repeat(np.arange(self.node_count, dtype=np.int64), self.degree))

    @cached_property
    def in_arcs(self) -> tuple[np.ndarray, np.ndarray]:
        """``(in_indptr, arc_ids)``: for each node, the ids of arcs pointing at it."""
        order = np.argsort(self.indices, kind="stable")
        in_indptr = np.zeros(self.node_count + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.indices, minlength=self.node_count), out=in_indptr[1:])
        return _frozen(in_indptr), _frozen(order.astype(np.int64))

    @cached_property
    def adjacency_dicts(self) -> list[dict[int, float]]:
        """Per-node ``{neighbor: weight}`` maps of out-arcs."""
        out = []
        ind, wts, ptr = self.indices.tolist(), self.weights.tolist(), self.indptr.tolist()
        for v in range(self.node_count):
            a, b = ptr[v], ptr[v + 1]
            out.append(dict(zip(ind[a:b], wts[a:b])))
        return out

    def label(self, v: int):
        return self.labels[v] if self.labels is not None else v

    def edges(self):
        """Yield ``(u, v, w)``; undirected edges are yielded once with ``u < v``."""
        src = self.arc_sources
        for a in range(self.arc_count):
            u, v = int(src[a]), int(self.indices[a])
            if self.directed or u < v:
                yield u, v, float(self.weights[a])

    def adjacency_matrix(self, weighted: bool = False) -> sp.csr_matrix:
        data = self.weights if weighted else np.ones(self.arc_count)
        n = self.node_count
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(n, n))

    def subgraph(self, nodes: Sequence[int]) -> "Graph":
        """Induced subgraph; node ``nodes[k]`` becomes ``k``. Labels follow the nodes."""
        nodes = np.asarray(nodes, dtype=np.int64)
        remap = np.full(self.node_count, -1, dtype=np.int64)
        remap[nodes] = np.arange(len(nodes))
        src = remap[self.arc_sources]
        dst = remap[self.indices]
        keep = (src >= 0) & (dst >= 0)
        labels = [self.label(int(v)) for v in nodes]
        return Graph._from_arcs(len(nodes), src[keep], dst[keep], self.weights[keep],
                                directed=self.directed, weighted=self.weighted, labels=labels)

    def as_directed(self) -> "Graph":
        """The same arcs flagged as a directed graph."""
        if self.directed:
            return self
        return Graph(self.indptr, self.indices, self.weights, directed=True,
                     weighted=self.weighted, labels=self.labels)

    def with_weights(self, weights) -> "Graph":
        """Copy with new per-edge weights (undirected: one value per stored edge, symmetric)."""
        weights = np.asarray(weights, dtype=np.float64)
        if self.directed:
            arc_w = weights
        else:
            edges = list(self.edges())
            if len(weights) != len(edges):
                raise ValueError("need one weight per edge")
            return Graph.from_edges(self.node_count, [(u, v, w) for (u, v, _), w in zip(edges, weights)],
                                    weighted=True, labels=self.labels)
        return Graph(self.indptr, self.indices, arc_w, directed=True, weighted=True, labels=self.labels)

    def is_connected(self) -> bool:
        if self.node_count == 0:
            return False
        k, _ = connected_components(self.adjacency_matrix(), directed=self.directed,
                                    connection="weak")
        return k == 1

    def __repr__(self) -> str:
        kind = "directed" if self.directed else "undirected"
        w = ", weighted" if self.weighted else ""
        return f"<Graph {kind}{w}: {self.node_count} nodes, {self.edge_count} edges>"


def check_node(g: Graph, v) -> int:
    v = int(v)
    if not 0 <= v < g.node_count:
        raise IndexError(f"node {v} not in graph of {g.node_count} nodes")
    return v


# -- ingestion --------------------------------------------------------------


def load_edge_list(stream: TextIO | Iterable[str], weighted: bool = False,
                   directed: bool = False) -> Graph:
    """Parse a SNAP-style whitespace-separated edge list.

    Lines starting with ``#`` (or ``%``) and blank lines are skipped. Node
    labels are remapped to dense ids: numeric order when every label is
    an integer, first appearance otherwise. Self-loops and repeated edges
    are removed; the counts are logged and kept on the returned graph.
    """
    raw: list[tuple[str, str, float]] = []
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line or line[0] in "#%":
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise GraphFormatError(f"expected 'u v' or 'u v w', got {line!r}", lineno)
        w = 1.0
        if weighted:
            if len(parts) < 3:
                raise GraphFormatError("missing weight", lineno)
            try:
                w = float(parts[2])
            except ValueError:
                raise GraphFormatError(f"weight {parts[2]!r} is not a number", lineno) from None
            if not w > 0 or not np.isfinite(w):
                raise ValueError(f"line {lineno}: weight must be positive, got {parts[2]}")
        raw.append((parts[0], parts[1], w))
    if not raw:
        raise GraphFormatError("edge list is empty")

    seen = dict.fromkeys(lab for u, v, _ in raw for lab in (u, v))
    labels: list = list(seen)
    try:
        ints = [int(x) for x in labels]
        labels = sorted(ints)
        index = {str(x): i for i, x in enumerate(labels)}
        # "007" and "7" are the same node once parsed
        index.update({lab: index[str(int(lab))] for lab in seen})
    except ValueError:
        index = {lab: i for i, lab in enumerate(labels)}

    g = Graph.from_edges(len(labels), ((index[u], index[v], w) for u, v, w in raw),
                         directed=directed, weighted=weighted, labels=labels)
    if g.dropped_self_loops or g.dropped_duplicates:
        log.warning("dropped %d self-loops and %d duplicate edges (first occurrence kept)",
                    g.dropped_self_loops, g.dropped_duplicates)
    return g


def read_graph(path, weighted: bool = False, directed: bool = False) -> Graph:
    with open(path) as fh:
        return load_edge_list(fh, weighted=weighted, directed=directed)


def write_edge_list(g: Graph, stream: TextIO, header: str | None = None) -> None:
    if header:
        for line in header.splitlines():
            stream.write(f"# {line}\n")
    for u, v, w in g.edges():
        if g.weighted:
            stream.write(f"{g.label(u)} {g.label(v)} {w:.17g}\n")
        else:
            stream.write(f"{g.label(u)} {g.label(v)}\n")


# -- structure --------------------------------------------------------------


def giant_component(g: Graph) -> Graph:
    """Largest (weakly) connected component, re-indexed densely.

    Ties go to the component holding the smallest node id.
    """
    if g.node_count == 0:
        raise ValueError("graph is empty")
    _, comp = connected_components(g.adjacency_matrix(), directed=g.directed, connection="weak")
    sizes = np.bincount(comp)
    # connected_components numbers components by first node, so argmax picks the lowest id on ties
    best = int(np.argmax(sizes))
    nodes = np.flatnonzero(comp == best)
    if len(nodes) == g.node_count:
        return g
    return g.subgraph(nodes)


@dataclass(frozen=True)
class Ball:
    """Nodes within ``radius`` hops of ``center`` plus the edges leaving them.

    ``nodes[k]`` is the parent id of local node ``k``; the center is local 0.
    ``boundary_degree[k]`` counts (weighted graphs: sums the weight of)
    out-edges from local node ``k`` to nodes outside the ball.
    """

    center: int
    radius: int
    nodes: np.ndarray
    subgraph: Graph
    boundary_degree: np.ndarray

    @property
    def total_degree(self) -> np.ndarray:
        """Degree (or strength) of each ball node in the parent graph."""
        own = self.subgraph.strength if self.subgraph.weighted else self.subgraph.degree
        return own + self.boundary_degree


def bfs_distances(g: Graph, source: int, limit: int | None = None) -> dict[int, int]:
    """Hop distances along out-arcs, in BFS order, optionally capped at ``limit``."""
    dist = {source: 0}
    queue = deque([source])
    ptr, ind = g.indptr, g.indices
    while queue:
        u = queue.popleft()
        du = dist[u]
        if limit is not None and du >= limit:
            continue
        for v in ind[ptr[u]:ptr[u + 1]].tolist():
            if v not in dist:
                dist[v] = du + 1
                queue.append(v)
    return dist


def ball(g: Graph, center: int, radius: int) -> Ball:
    center = check_node(g, center)
    if radius < 1:
        raise ValueError("radius must be at least 1")
    nodes = np.fromiter(bfs_distances(g, center, radius), dtype=np.int64)
    sub = g.subgraph(nodes)
    if g.weighted:
        boundary = g.strength[nodes] - sub.strength
    else:
        boundary = (g.degree[nodes] - sub.degree).astype(np.float64)
    return Ball(center, radius, _frozen(nodes), sub, _frozen(boundary))


def largest_eigenvalue(g: Graph, tol: float = 1e-10, max_iter: int = 100_000) -> float:
    """Largest eigenvalue of the unweighted adjacency matrix by power iteration.

    Iterates with ``A + I`` from the all-ones vector: the shift leaves the
    eigenvectors alone but stops bipartite graphs (paths, stars, even
    cycles) from oscillating between the ``+lambda`` and ``-lambda`` modes.
    """
    if g.directed:
        raise ValueError("largest_eigenvalue needs an undirected graph")
    A = g.adjacency_matrix()
    x = np.ones(g.node_count) / np.sqrt(g.node_count)
    lam = float(x @ (A @ x))
    for _ in range(max_iter):
        y = A @ x
        x_new = y + x
        x_new /= np.linalg.norm(x_new)
        lam_new = float(x_new @ (A @ x_new))
        if abs(lam_new - lam) < tol:
            return lam_new
        x, lam = x_new, lam_new
    raise ConvergenceError(f"power iteration did not converge in {max_iter} steps", lam)


def summary(g: Graph) -> dict:
    """JSON-ready ``{nodes, edges, max_degree, lambda}``."""
    lam = None
    if not g.directed and g.node_count and g.is_connected():
        lam = largest_eigenvalue(g)
    return {
        "nodes": g.node_count,
        "edges": g.edge_count,
        "max_degree": int(g.degree.max()) if g.node_count else 0,
        "lambda": lam,
    }
