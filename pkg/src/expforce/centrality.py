"""Comparator metrics: k-shell index and eigenvector centrality."""

from __future__ import annotations

import numpy as np

from .graph import ConvergenceError, Graph
from .scores import NodeScores


def k_shell(g: Graph) -> NodeScores:
    """Core number of every node by bucket peeling (Batagelj-Zaversnik).

    Nodes are removed in non-decreasing order of their current degree; a
    node's shell is its degree at removal time, which never drops below the
    shell of earlier removals.
    """
    if g.directed:
        raise ValueError("k_shell needs an undirected graph")
    n = g.node_count
    deg = g.degree.astype(np.int64).copy()
    if n == 0:
        return NodeScores("kshell", deg)
    maxd = int(deg.max())
    # bucket sort nodes by degree
    bins = np.zeros(maxd + 2, dtype=np.int64)
    np.cumsum(np.bincount(deg, minlength=maxd + 1), out=bins[1:])
    start = bins[:-1].copy()
    order = np.argsort(deg, kind="stable")
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    ptr, ind = g.indptr, g.indices
    deg_l, order_l, pos_l, start_l = deg.tolist(), order.tolist(), pos.tolist(), start.tolist()
    for i in range(n):
        v = order_l[i]
        dv = deg_l[v]
        for u in ind[ptr[v]:ptr[v + 1]].tolist():
            du = deg_l[u]
            if du > dv:
                # swap u with the first node of its bucket, then shrink the bucket
                pu, pw = pos_l[u], start_l[du]
                w = order_l[pw]
                if u != w:
                    order_l[pu], order_l[pw] = w, u
                    pos_l[u], pos_l[w] = pw, pu
                start_l[du] += 1
                deg_l[u] = du - 1
    return NodeScores("kshell", np.asarray(deg_l, dtype=np.int64))


def eigenvector_centrality(g: Graph, tol: float = 1e-10, max_iter: int = 100_000) -> NodeScores:
    """Dominant adjacency eigenvector, scaled so its largest entry is 1.

    Edge weights are ignored. The iteration runs on ``A + I`` (same
    eigenvectors, no oscillation on bipartite graphs) and stops when the
    max-norm change between iterates falls below ``tol``.
    """
    if g.directed:
        raise ValueError("eigenvector_centrality needs an undirected graph")
    if not g.is_connected():
        raise ValueError("eigenvector_centrality needs a connected graph; take the giant component first")
    A = g.adjacency_matrix()
    x = np.ones(g.node_count)
    for _ in range(max_iter):
        y = A @ x + x
        y /= y.max()
        if np.abs(y - x).max() < tol:
            return NodeScores("eigen", y)
        x = y
    raise ConvergenceError(f"eigenvector centrality did not converge in {max_iter} steps", x)
