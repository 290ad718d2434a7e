"""Expected Force: entropy of the outward degree over all transmission clusters.

A transmission cluster is the set of infected nodes after ``x`` transmission
events from a single seed with no recovery, counted once per distinct ordered
sequence of transmissions. Its degree is the number (or total weight) of
edges leading from the cluster to still-susceptible nodes, i.e. the force of
infection the outbreak exerts at that moment.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .graph import Ball, Graph, check_node
from .scores import NodeScores

MAX_TRANSMISSIONS = 3
_SNAP = 1e-12


@dataclass(frozen=True)
class ExfOptions:
    """Enumeration settings.

    ``x`` is the number of transmission events (2 or 3). ``weighted`` makes
    the cluster degree a weight sum and weights each sequence by the product
    of its edge weights. ``directed`` is only accepted together with a
    directed graph, or on an undirected one where it changes nothing.
    ``alpha`` rescales the seed degree in :func:`expected_force_modified`.
    """

    x: int = 2
    weighted: bool = False
    directed: bool = False
    alpha: float = 2.0

    def __post_init__(self):
        if self.x not in (2, MAX_TRANSMISSIONS):
            raise ValueError(f"x must be 2 or 3, got {self.x}")
        if not self.alpha > 1:
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")


@dataclass(frozen=True)
class TransmissionCluster:
    nodes: frozenset
    sequence: tuple  # ((source, target), ...) in infection order
    weight: float
    out_degree: float


def _resolve(g: Graph, opts: ExfOptions):
    if g.directed and not opts.directed:
        raise ValueError("graph is directed; pass ExfOptions(directed=True) or load it undirected")
    if opts.weighted:
        return g.adjacency_dicts, g.strength.tolist()
    if not g.weighted:
        return g.adjacency_dicts, g.degree.astype(float).tolist()
    unit = [dict.fromkeys(nb, 1.0) for nb in g.adjacency_dicts]
    return unit, g.degree.astype(float).tolist()


def _grow(adj, total, x, cluster, inset, d, w, path, sink):
    """Extend the cluster by every possible next transmission, depth first.

    ``d`` is the weight of arcs leaving ``cluster``; adding ``v`` adds its
    total out-weight and removes the arcs between ``v`` and the cluster.
    """
    depth = len(cluster) - 1
    last = depth + 1 == x
    for u in tuple(cluster):
        for v, wt in adj[u].items():
            if v in inset:
                continue
            av = adj[v]
            inner = 0.0
            for c in cluster:
                inner += adj[c].get(v, 0.0) + av.get(c, 0.0)
            d_next = d + total[v] - inner
            # weighted sums can cancel to a rounding residue instead of 0
            if d_next <= _SNAP * (d + total[v]):
                d_next = 0.0
            w_next = w * wt
            if last:
                sink(w_next, d_next, path + ((u, v),) if path is not None else None, cluster, v)
            else:
                cluster.append(v)
                inset.add(v)
                _grow(adj, total, x, cluster, inset, d_next, w_next,
                      path + ((u, v),) if path is not None else None, sink)
                cluster.pop()
                inset.discard(v)


def _walk(adj, total, seed, x, sink, keep_path=False):
    _grow(adj, total, x, [seed], {seed}, total[seed], 1.0, () if keep_path else None, sink)


def enumerate_clusters(g: Graph, seed: int, opts: ExfOptions = ExfOptions()) -> list[TransmissionCluster]:
    """Every ordered sequence of ``opts.x`` transmissions from ``seed``.

    At each step any arc from an infected node to a susceptible one may
    fire. Unweighted sequences have weight 1; weighted ones carry the
    product of their edge weights.
    """
    seed = check_node(g, seed)
    adj, total = _resolve(g, opts)
    out: list[TransmissionCluster] = []

    def sink(w, d, path, cluster, v):
        out.append(TransmissionCluster(frozenset(cluster) | {v}, path,
                                       w if opts.weighted else 1.0, d))

    _walk(adj, total, seed, opts.x, sink, keep_path=True)
    return out


def _entropy_of_masses(masses) -> float:
    """``-sum p log p`` over ``masses`` normalised to 1 (zero if they sum to 0)."""
    counts = Counter(masses)
    s = math.fsum(m * c for m, c in counts.items())
    if not s > 0:
        return 0.0
    h = 0.0
    for m, c in counts.items():
        if m > 0:
            p = m / s
            h -= c * p * math.log(p)
    # a single positive mass gives -1*log(1) = -0.0
    return h + 0.0


def _force(adj, total, seed, opts: ExfOptions) -> float:
    masses = []
    if opts.weighted:
        _walk(adj, total, seed, opts.x, lambda w, d, *_: masses.append(w * d))
    else:
        _walk(adj, total, seed, opts.x, lambda w, d, *_: masses.append(d))
    return _entropy_of_masses(masses)


def expected_force(g: Graph, seed: int, opts: ExfOptions = ExfOptions()) -> float:
    """Expected Force of ``seed``: natural-log entropy of the normalised cluster degrees.

    Each sequence's share is ``w_j d_j / sum_k w_k d_k``. Returns 0 when no
    sequence of ``opts.x`` transmissions exists or every cluster degree is 0.
    """
    seed = check_node(g, seed)
    adj, total = _resolve(g, opts)
    return _force(adj, total, seed, opts)


def expected_force_ball(b: Ball, opts: ExfOptions = ExfOptions()) -> float:
    """Expected Force of the ball's center using only the ball.

    Edges leaving the ball enter through ``boundary_degree``, so a ball of
    radius ``opts.x`` or more gives the full-graph value.
    """
    if b.radius < opts.x:
        raise ValueError(f"ball radius {b.radius} is smaller than x={opts.x}")
    sub = b.subgraph
    adj, _ = _resolve(sub, opts)
    if opts.weighted:
        total = (sub.strength + b.boundary_degree).tolist()
    else:
        total = (sub.degree + b.boundary_degree).tolist()
    return _force(adj, total, 0, opts)


def expected_force_modified(g: Graph, seed: int | None = None, opts: ExfOptions = ExfOptions(),
                            *, force: float | None = None, degree: float | None = None) -> float:
    """``log(alpha * deg(seed)) * ExF(seed)``; 0 for an isolated seed.

    ``force`` and ``degree`` may be passed directly to skip the enumeration
    (``g`` and ``seed`` are then unused).
    """
    if not opts.alpha > 1:
        raise ValueError(f"alpha must exceed 1, got {opts.alpha}")
    if degree is None:
        seed = check_node(g, seed)
        degree = float(g.strength[seed] if opts.weighted else g.degree[seed])
    if degree <= 0:
        return 0.0
    if force is None:
        force = expected_force(g, seed, opts)
    return math.log(opts.alpha * degree) * force


# -- batch driver -----------------------------------------------------------

_shared: dict = {}


def _init_worker(g, opts):
    _shared["adj"], _shared["total"] = _resolve(g, opts)
    _shared["opts"] = opts


def _chunk(nodes):
    adj, total, opts = _shared["adj"], _shared["total"], _shared["opts"]
    return [_force(adj, total, v, opts) for v in nodes]


def exf_all(g: Graph, opts: ExfOptions = ExfOptions(), workers: int = 1,
            nodes=None) -> NodeScores:
    """Expected Force of every node (or of ``nodes``), optionally over worker processes.

    Results are assembled by position, so they do not depend on scheduling.
    """
    nodes = list(range(g.node_count)) if nodes is None else [check_node(g, v) for v in nodes]
    if workers <= 1 or len(nodes) < 2 * workers:
        adj, total = _resolve(g, opts)
        vals = [_force(adj, total, v, opts) for v in nodes]
    else:
        # interleave so hubs spread across chunks
        chunks = [nodes[k::workers * 4] for k in range(workers * 4)]
        vals = [0.0] * len(nodes)
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(g, opts)) as ex:
            for k, res in enumerate(ex.map(_chunk, chunks)):
                vals[k::workers * 4] = res
    name = f"exf{opts.x}" if opts.x != 2 else "exf"
    return NodeScores(name, np.asarray(vals, dtype=np.float64))


def exf_modified_all(g: Graph, opts: ExfOptions = ExfOptions(), force: NodeScores | None = None,
                     workers: int = 1) -> NodeScores:
    if force is None:
        force = exf_all(g, opts, workers)
    deg = g.strength if opts.weighted else g.degree
    vals = [expected_force_modified(None, None, opts, force=float(f), degree=float(k))
            for f, k in zip(force.values, deg)]
    return NodeScores("exf_m", np.asarray(vals, dtype=np.float64))
