import random

import pytest

from distsim import Graph


def random_connected_graph(n: int, extra: int, seed: int) -> Graph:
    """Random tree plus `extra` additional edges; always connected."""
    rng = random.Random(seed)
    edges = set()
    for v in range(1, n):
        edges.add((rng.randrange(v), v))
    target = n - 1 + extra
    while len(edges) < target:
        u, v = rng.randrange(n), rng.randrange(n)
        if u != v:
            edges.add((min(u, v), max(u, v)))
    return Graph(n=n, edges=tuple(sorted(edges)))


def random_graph(n: int, seed: int, max_extra: int | None = None) -> Graph:
    """Random graph of moderate density, possibly disconnected."""
    rng = random.Random(seed)
    m = rng.randrange(0, max_extra if max_extra is not None else 2 * n)
    edges = set()
    attempts = 0
    while len(edges) < m and attempts < 10 * m + 10:
        u, v = rng.randrange(n), rng.randrange(n)
        attempts += 1
        if u != v:
            edges.add((min(u, v), max(u, v)))
    return Graph(n=n, edges=tuple(sorted(edges)))


@pytest.fixture
def tmp_graph_file(tmp_path):
    def write(g: Graph, name: str = "g.txt"):
        path = tmp_path / name
        path.write_text(g.to_edge_list_text(), encoding="utf-8")
        return str(path)
    return write
