import networkx as nx
import numpy as np
import pytest
from hypothesis import strategies as st

from expforce.graph import Graph


def from_nx(G, weighted=False) -> Graph:
    """Relabel a networkx graph to 0..n-1 and convert it."""
    G = nx.convert_node_labels_to_integers(G)
    if weighted:
        edges = [(u, v, d.get("weight", 1.0)) for u, v, d in G.edges(data=True)]
    else:
        edges = list(G.edges())
    return Graph.from_edges(G.number_of_nodes(), edges, directed=G.is_directed(), weighted=weighted)


def to_nx(g: Graph):
    G = nx.DiGraph() if g.directed else nx.Graph()
    G.add_nodes_from(range(g.node_count))
    G.add_weighted_edges_from(g.edges())
    return G


def path(n):
    return from_nx(nx.path_graph(n))


def star(leaves):
    return from_nx(nx.star_graph(leaves))


def complete(n):
    return from_nx(nx.complete_graph(n))


@st.composite
def connected_graphs(draw, min_nodes=2, max_nodes=8):
    """Random connected simple graphs: a random tree plus random extra edges."""
    n = draw(st.integers(min_nodes, max_nodes))
    edges = set()
    for v in range(1, n):
        u = draw(st.integers(0, v - 1))
        edges.add((u, v))
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=2 * n))
    for u, v in extra:
        if u != v:
            edges.add((min(u, v), max(u, v)))
    return Graph.from_edges(n, sorted(edges))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance reporting ---------------------------------------------------

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
