"""Slow, obviously-correct reference implementations used by the tests."""

import math
from collections import Counter

import numpy as np


def arcs(g):
    """All arcs (u, v, w); undirected edges appear in both directions."""
    out = []
    for u in range(g.node_count):
        lo, hi = g.indptr[u], g.indptr[u + 1]
        for v, w in zip(g.indices[lo:hi].tolist(), g.weights[lo:hi].tolist()):
            out.append((u, v, w))
    return out


def brute_sequences(g, seed, x, weighted=False):
    """Every ordered transmission sequence from ``seed``, recomputed from scratch.

    Returns ``(cluster, sequence, weight, cut)`` tuples where ``cut`` is the
    (weighted) number of arcs leaving ``cluster``, counted over all arcs.
    """
    all_arcs = arcs(g)
    out = []

    def rec(cluster, seq, w):
        if len(seq) == x:
            cut = sum((a[2] if weighted else 1.0) for a in all_arcs
                      if a[0] in cluster and a[1] not in cluster)
            out.append((frozenset(cluster), tuple(seq), w, cut))
            return
        frontier = [a for a in all_arcs if a[0] in cluster and a[1] not in cluster]
        for u, v, wt in frontier:
            rec(cluster | {v}, seq + [(u, v)], w * (wt if weighted else 1.0))

    rec({seed}, [], 1.0)
    return out


def brute_force(g, seed, x=2, weighted=False):
    seqs = brute_sequences(g, seed, x, weighted)
    masses = np.array([w * cut for _, _, w, cut in seqs], dtype=float)
    if len(masses) == 0 or masses.sum() <= 0:
        return 0.0
    p = masses[masses > 0] / masses.sum()
    return float(-(p * np.log(p)).sum())


def entropy_of(values):
    c = Counter(values)
    s = sum(k * m for k, m in c.items())
    return -sum(m * (k / s) * math.log(k / s) for k, m in c.items() if k > 0)
