"""Random network families: Chung-Lu with Pareto weights, and connected
simple graphs realising a degree sequence sampled from a real network."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .graph import Graph, giant_component

log = logging.getLogger(__name__)

SWAPS_PER_EDGE = 20
RETRY_LIMIT = 100


@dataclass(frozen=True)
class DegreeSpec:
    """``kind`` is ``"pareto"`` (uses ``scale``/``shape``) or ``"sampled"`` (uses ``sequence``)."""

    kind: str = "pareto"
    n: int = 1000
    scale: float = 1.0
    shape: float = 2.3
    sequence: tuple | None = None
    band: float = 0.05  # accepted giant-component size: n * (1 +- band)

    def __post_init__(self):
        if self.kind not in ("pareto", "sampled"):
            raise ValueError(f"unknown degree spec kind {self.kind!r}")
        if self.kind == "pareto" and not self.shape > 1:
            raise ValueError("Pareto shape must exceed 1")
        if self.kind == "sampled":
            if self.sequence is None:
                raise ValueError("sampled spec needs a degree sequence")
            if min(self.sequence) < 1:
                raise ValueError("sampled degrees must be at least 1")
            if self.n > len(self.sequence):
                raise ValueError("cannot sample more degrees than the sequence holds")


def pareto_weights(n: int, rng: np.random.Generator, scale: float = 1.0, shape: float = 2.3) -> np.ndarray:
    # numpy's pareto is the Lomax form; shifting by one gives the classical Pareto
    return scale * (rng.pareto(shape, n) + 1.0)


def chung_lu_graph(weights, rng: np.random.Generator) -> Graph:
    """Each pair ``i < j`` is linked independently with probability ``min(1, w_i w_j / sum(w))``."""
    w = np.asarray(weights, dtype=np.float64)
    n = len(w)
    total = w.sum()
    src, dst = [], []
    # one row at a time keeps memory at O(n) per step
    for i in range(n - 1):
        p = np.minimum(1.0, w[i] * w[i + 1:] / total)
        hit = np.flatnonzero(rng.random(n - i - 1) < p)
        if len(hit):
            src.append(np.full(len(hit), i))
            dst.append(hit + i + 1)
    if src:
        s, d = np.concatenate(src), np.concatenate(dst)
    else:
        s = d = np.empty(0, dtype=np.int64)
    return Graph._from_arcs(n, np.concatenate([s, d]), np.concatenate([d, s]),
                            np.ones(2 * len(s)), directed=False, weighted=False)


def chung_lu(spec: DegreeSpec, rng: np.random.Generator, max_attempts: int = 200) -> Graph:
    """Giant component of a Chung-Lu graph with Pareto expected degrees, sized ``n * (1 +- band)``.

    The generated node count is inflated by a running estimate of the
    giant-component fraction; graphs whose giant component falls outside
    the band are discarded and regenerated.
    """
    if spec.kind != "pareto":
        raise ValueError("chung_lu needs a pareto spec")
    lo, hi = spec.n * (1 - spec.band), spec.n * (1 + spec.band)
    frac = 0.6
    seen = []
    for _ in range(max_attempts):
        n_gen = max(2, int(round(spec.n / frac)))
        g = giant_component(chung_lu_graph(pareto_weights(n_gen, rng, spec.scale, spec.shape), rng))
        if lo <= g.node_count <= hi:
            return g
        seen.append(g.node_count / n_gen)
        frac = float(np.median(seen))
    raise RuntimeError(f"no giant component within [{lo:.0f}, {hi:.0f}] after {max_attempts} attempts")


# -- degree-sequence graphs -------------------------------------------------


def is_graphical(degrees) -> bool:
    """Erdos-Gallai test."""
    return nx.is_graphical([int(x) for x in degrees], method="eg")


def _stub_matching(degrees, rng):
    stubs = np.repeat(np.arange(len(degrees)), degrees)
    rng.shuffle(stubs)
    return stubs.reshape(-1, 2).tolist()


def _key(u, v):
    return (u, v) if u < v else (v, u)


def _degrees_of(edges, n):
    deg = [0] * n
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    return deg


def _make_simple(edges, rng, budget, debug=False, degrees=None):
    """Remove self-loops and multi-edges by double-edge swaps with random partners."""
    count: dict[tuple, int] = {}
    for u, v in edges:
        k = _key(u, v)
        count[k] = count.get(k, 0) + 1

    def bad(i):
        u, v = edges[i]
        return u == v or count[_key(u, v)] > 1

    m = len(edges)
    todo = [i for i in range(m) if bad(i)]
    swaps = 0
    while todo:
        if swaps > budget:
            return False
        i = todo.pop()
        if not bad(i):
            continue
        j = int(rng.integers(m))
        if j == i:
            todo.append(i)
            continue
        (a, b), (c, d) = edges[i], edges[j]
        if rng.random() < 0.5:
            c, d = d, c
        # proposed (a, c), (b, d)
        # (a, c) == (b, d) happens when two self-loops meet and would leave a double edge
        if (a == c or b == d or _key(a, c) == _key(b, d)
                or count.get(_key(a, c), 0) or count.get(_key(b, d), 0)):
            todo.append(i)
            swaps += 1
            continue
        for e in (edges[i], edges[j]):
            k = _key(*e)
            count[k] -= 1
            if not count[k]:
                del count[k]
        edges[i], edges[j] = [a, c], [b, d]
        count[_key(a, c)] = 1
        count[_key(b, d)] = 1
        swaps += 1
        if debug:
            assert _degrees_of(edges, len(degrees)) == list(degrees)
        if bad(i):
            todo.append(i)
    return True


def _connect(edges, n, rng, debug=False, degrees=None):
    """Merge components by swapping a cycle edge of one with any edge of another.

    Removing a non-bridge keeps its component whole, and the two new edges
    join it to both halves of the other component, so each swap lowers the
    component count while keeping the graph simple.
    """
    G = nx.Graph()
    G.add_nodes_from(range(n))
    G.add_edges_from(edges)
    while True:
        comps = list(nx.connected_components(G))
        if len(comps) == 1:
            break
        comp_of = {}
        for k, c in enumerate(comps):
            for v in c:
                comp_of[v] = k
        bridges = {_key(u, v) for u, v in nx.bridges(G)}
        candidates = [e for e in G.edges() if _key(*e) not in bridges]
        if not candidates:
            return None
        a, b = candidates[int(rng.integers(len(candidates)))]
        others = [e for e in G.edges() if comp_of[e[0]] != comp_of[a]]
        if not others:
            return None
        c, d = others[int(rng.integers(len(others)))]
        G.remove_edge(a, b)
        G.remove_edge(c, d)
        G.add_edge(a, c)
        G.add_edge(b, d)
        if debug:
            assert [G.degree(v) for v in range(n)] == list(degrees)
    return [list(e) for e in G.edges()]


def realize_degree_sequence(degrees, rng: np.random.Generator, debug: bool = False) -> Graph:
    """Connected simple graph with exactly ``degrees`` (configuration model plus double-edge swaps)."""
    degrees = [int(x) for x in degrees]
    n = len(degrees)
    if sum(degrees) % 2:
        raise ValueError("degree sum is odd")
    if not is_graphical(degrees):
        raise ValueError("degree sequence is not graphical")
    if n > 1 and sum(degrees) // 2 < n - 1:
        raise ValueError("too few edges for a connected graph")
    for _ in range(RETRY_LIMIT):
        edges = _stub_matching(degrees, rng)
        if not _make_simple(edges, rng, SWAPS_PER_EDGE * max(1, len(edges)), debug, degrees):
            continue
        connected = _connect(edges, n, rng, debug, degrees)
        if connected is None:
            continue
        g = Graph.from_edges(n, connected)
        if g.degree.tolist() != degrees:
            raise AssertionError("rewiring changed the degree sequence")
        return g
    raise RuntimeError("could not realise the degree sequence as a connected simple graph")


def degree_sequence_graph(spec: DegreeSpec, rng: np.random.Generator, debug: bool = False) -> Graph:
    """Sample ``spec.n`` degrees without replacement and realise them.

    An odd sum resamples one value; an unrealisable draw is redrawn up to
    the retry limit.
    """
    if spec.kind != "sampled":
        raise ValueError("degree_sequence_graph needs a sampled spec")
    pool = np.asarray(spec.sequence, dtype=np.int64)
    for _ in range(RETRY_LIMIT):
        idx = rng.choice(len(pool), size=spec.n, replace=False)
        degs = pool[idx].copy()
        rest = np.setdiff1d(np.arange(len(pool)), idx)
        tries = 0
        while degs.sum() % 2 and len(rest) and tries < RETRY_LIMIT:
            k = int(rng.integers(spec.n))
            j = int(rng.choice(rest))
            degs[k] = pool[j]
            tries += 1
        if degs.sum() % 2:
            continue
        try:
            return realize_degree_sequence(degs, rng, debug)
        except (ValueError, RuntimeError) as exc:
            log.debug("redrawing degree sample: %s", exc)
    raise ValueError("no realisable degree sample within the retry limit")


def read_degree_sequence(path) -> list[int]:
    """One integer per non-comment line (extra columns ignored)."""
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line[0] == "#":
                continue
            try:
                out.append(int(line.split()[0]))
            except ValueError:
                raise ValueError(f"line {lineno}: not an integer degree: {line!r}") from None
    return out
