import numpy as np
import pytest

from delaypatch.graph import Graph


def path_graph(n):
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n):
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def star_graph(leaves, center=0):
    others = [i for i in range(leaves + 1) if i != center]
    return Graph.from_edges(leaves + 1, [(center, j) for j in others])


def complete_graph(n):
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def two_triangles():
    """Triangles {0,1,2} and {3,4,5} joined by the bridge (2, 3)."""
    return Graph.from_edges(6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (2, 3)])


def barbell(clique=5, handle=3):
    edges = [(i, j) for i in range(clique) for j in range(i + 1, clique)]
    off = clique + handle
    edges += [(off + i, off + j) for i in range(clique) for j in range(i + 1, clique)]
    chain = [clique - 1] + list(range(clique, clique + handle)) + [off]
    edges += list(zip(chain[:-1], chain[1:]))
    return Graph.from_edges(2 * clique + handle, edges)


def random_connected(n, mean_degree, rng):
    p = mean_degree / (n - 1)
    while True:
        upper = np.triu(rng.random((n, n)) < p, k=1)
        g = Graph.from_edges(n, np.argwhere(upper))
        if g.is_connected():
            return g


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


# criterion number -> (status, detail), filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:>2}: {status}  {detail}")
