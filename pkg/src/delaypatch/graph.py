"""Undirected graph substrate: construction, SNAP ingestion, SBM sampling,
and the structural queries used by the policies."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

# Sentinel for nodes not reachable from any BFS source.
UNREACHABLE = -1


class GraphError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable simple undirected graph on nodes ``0..n-1``.

    ``edges`` is an ``(m, 2)`` integer array with ``i < j`` on every row,
    sorted lexicographically. ``adjacency`` is the symmetric CSR 0/1 matrix.
    """

    n: int
    edges: np.ndarray
    adjacency: sp.csr_matrix = field(repr=False)

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                         dtype=np.int64).reshape(-1, 2)
        if n < 0:
            raise GraphError("node count must be nonnegative")
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise GraphError(f"edge endpoint outside 0..{n - 1}")
        arr = arr[arr[:, 0] != arr[:, 1]]
        arr = np.sort(arr, axis=1)
        arr = np.unique(arr, axis=0) if len(arr) else arr
        m = len(arr)
        rows = np.concatenate([arr[:, 0], arr[:, 1]])
        cols = np.concatenate([arr[:, 1], arr[:, 0]])
        adj = sp.csr_matrix((np.ones(2 * m), (rows, cols)), shape=(n, n))
        adj.sort_indices()
        arr.setflags(write=False)
        return cls(n=n, edges=arr, adjacency=adj)

    @property
    def m(self) -> int:
        return len(self.edges)

    def neighbors(self, i: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[i]:a.indptr[i + 1]]

    def subgraph(self, nodes) -> "Graph":
        """Induced subgraph relabeled to ``0..len(nodes)-1`` in the given order."""
        nodes = np.asarray(nodes, dtype=np.int64)
        relabel = np.full(self.n, -1, dtype=np.int64)
        relabel[nodes] = np.arange(len(nodes))
        e = relabel[self.edges]
        keep = (e >= 0).all(axis=1)
        return Graph.from_edges(len(nodes), e[keep])

    def largest_component(self) -> "Graph":
        if self.n == 0:
            return self
        _, labels = connected_components(self.adjacency, directed=False)
        counts = np.bincount(labels)
        keep = np.flatnonzero(labels == np.argmax(counts))
        if len(keep) == self.n:
            return self
        return self.subgraph(keep)

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        ncomp, _ = connected_components(self.adjacency, directed=False)
        return ncomp == 1


def load_edgelist(path) -> Graph:
    """Read a SNAP-style whitespace-separated edge list.

    Node ids are relabeled to ``0..n-1`` in order of first appearance.
    Reversed and repeated pairs collapse to one edge; self-loops are dropped.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise GraphError(f"cannot read edge list {path}: {exc}") from exc

    ids: dict[int, int] = {}
    pairs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) < 2:
            raise GraphError(f"{path}:{lineno}: expected two node ids, got {line!r}")
        try:
            u, v = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise GraphError(f"{path}:{lineno}: non-integer token in {line!r}") from None
        pairs.append((ids.setdefault(u, len(ids)), ids.setdefault(v, len(ids))))

    g = Graph.from_edges(len(ids), np.array(pairs, dtype=np.int64).reshape(-1, 2))
    if g.m == 0:
        raise GraphError(f"{path}: no edges")
    return g


def write_edgelist(g: Graph, path) -> None:
    with open(path, "w") as fh:
        for i, j in g.edges:
            fh.write(f"{i} {j}\n")


@dataclass(frozen=True)
class SbmSpec:
    n: int
    k: int
    avg_degree: float = 8.0
    in_out_ratio: float = 10.0
    seed: int | None = None

    def __post_init__(self):
        if not (self.n >= self.k >= 1):
            raise GraphError(f"need n >= k >= 1, got n={self.n}, k={self.k}")
        if self.avg_degree <= 0:
            raise GraphError("avg_degree must be positive")
        if self.in_out_ratio <= 1:
            raise GraphError("in_out_ratio must exceed 1")

    def block_sizes(self) -> np.ndarray:
        base, extra = divmod(self.n, self.k)
        return np.array([base + (c < extra) for c in range(self.k)], dtype=np.int64)

    def edge_probabilities(self) -> tuple[float, float]:
        """(p_in, p_out) giving the requested expected mean degree."""
        s = self.block_sizes().astype(float)
        denom = np.sum(s * ((s - 1) + (self.n - s) / self.in_out_ratio))
        if denom <= 0:
            raise GraphError("no node pairs to connect")
        p_in = self.avg_degree * self.n / denom
        if p_in > 1:
            raise GraphError(f"infeasible SBM parameters: required p_in={p_in:.4g} > 1")
        return p_in, p_in / self.in_out_ratio


def sample_sbm(spec: SbmSpec) -> tuple[Graph, np.ndarray]:
    """Draw a full SBM graph; also return each node's community label."""
    p_in, p_out = spec.edge_probabilities()
    rng = np.random.default_rng(spec.seed)
    sizes = spec.block_sizes()
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    labels = np.repeat(np.arange(spec.k), sizes)

    chunks = []
    for a in range(spec.k):
        for b in range(a, spec.k):
            sa, sb = int(sizes[a]), int(sizes[b])
            if a == b:
                total = sa * (sa - 1) // 2
                p = p_in
            else:
                total = sa * sb
                p = p_out
            if total == 0:
                continue
            count = rng.binomial(total, p)
            if count == 0:
                continue
            idx = rng.choice(total, size=count, replace=False)
            if a == b:
                iu, ju = np.triu_indices(sa, k=1)
                u, v = iu[idx], ju[idx]
            else:
                u, v = np.divmod(idx, sb)
            chunks.append(np.column_stack([u + offsets[a], v + offsets[b]]))

    edges = np.concatenate(chunks) if chunks else np.empty((0, 2), dtype=np.int64)
    return Graph.from_edges(spec.n, edges), labels


def generate_sbm(spec: SbmSpec, largest_component: bool = True) -> Graph:
    g, _ = sample_sbm(spec)
    return g.largest_component() if largest_component else g


def degrees(g: Graph) -> np.ndarray:
    return np.diff(g.adjacency.indptr).astype(np.int64)


def multi_source_bfs(g: Graph, sources) -> np.ndarray:
    """Hop distance from the nearest source; ``UNREACHABLE`` where none reaches."""
    sources = np.unique(np.asarray(list(sources), dtype=np.int64))
    if sources.size == 0:
        raise GraphError("BFS needs at least one source")
    if sources.min() < 0 or sources.max() >= g.n:
        raise GraphError("BFS source outside node range")

    indptr, indices = g.adjacency.indptr, g.adjacency.indices
    dist = np.full(g.n, UNREACHABLE, dtype=np.int64)
    dist[sources] = 0
    queue = deque(sources.tolist())
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for v in indices[indptr[u]:indptr[u + 1]]:
            if dist[v] == UNREACHABLE:
                dist[v] = du
                queue.append(v)
    return dist


def eigenvector_centrality(g: Graph, tol: float = 1e-10, max_iter: int = 10_000) -> np.ndarray:
    """Perron vector of the adjacency matrix by power iteration.

    Iterates with ``A + I`` so bipartite graphs (paths, even cycles, stars)
    converge instead of oscillating; the eigenvectors are those of ``A``.
    """
    if g.n == 0:
        return np.zeros(0)
    a = g.adjacency
    v = np.ones(g.n) / np.sqrt(g.n)
    for _ in range(max_iter):
        w = a @ v + v
        norm = np.linalg.norm(w)
        if norm == 0:
            raise ConvergenceError("adjacency annihilated the iterate")
        w /= norm
        if np.max(np.abs(w - v)) < tol:
            return np.abs(w)
        v = w
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")
