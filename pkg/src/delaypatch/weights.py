"""Critical-edge weights at the patching delay and the Laplacians of the
flipped-weight graph."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .graph import Graph

CRITICAL = "critical"
FLIPPED = "flipped"

# weights below this are stored as exact zeros
WEIGHT_FLOOR = 1e-15
# floor on generalized degree before taking D^{-1/2}
DEGREE_FLOOR = 1e-12


class WeightError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EdgeWeights:
    """Weight per edge of ``graph``, aligned with ``graph.edges`` rows."""

    graph: Graph = field(repr=False)
    values: np.ndarray
    flavor: str
    horizon: float | None = None

    def matrix(self) -> sp.csr_matrix:
        g = self.graph
        keep = self.values > 0
        i, j = g.edges[keep, 0], g.edges[keep, 1]
        w = self.values[keep]
        return sp.csr_matrix(
            (np.concatenate([w, w]), (np.concatenate([i, j]), np.concatenate([j, i]))),
            shape=(g.n, g.n),
        )

    def as_dict(self) -> dict[tuple[int, int], float]:
        return {(int(i), int(j)): float(w) for (i, j), w in zip(self.graph.edges, self.values)}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["i", "j", "w"])
            for (i, j), w in zip(self.graph.edges, self.values):
                out.writerow([int(i), int(j), repr(float(w))])


def _endpoint_probs(g: Graph, xhat) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(xhat, dtype=float)
    if x.shape != (g.n,):
        raise WeightError(f"probability vector has shape {x.shape}, expected ({g.n},)")
    if np.any(x < 0) or np.any(x > 1):
        raise WeightError("probabilities must lie in [0, 1]")
    return x[g.edges[:, 0]], x[g.edges[:, 1]]


def _floor(w: np.ndarray) -> np.ndarray:
    w = np.clip(w, 0.0, 1.0)
    w[w < WEIGHT_FLOOR] = 0.0
    return w


def critical_weights(g: Graph, xhat, horizon: float | None = None) -> EdgeWeights:
    """Probability that each edge joins one infected and one healthy endpoint."""
    xi, xj = _endpoint_probs(g, xhat)
    w = xi * (1 - xj) + (1 - xi) * xj
    return EdgeWeights(g, _floor(w), CRITICAL, horizon)


def flipped_weights(g: Graph, xhat, horizon: float | None = None) -> EdgeWeights:
    """Probability that both endpoints share a state; ``1 - critical`` per edge."""
    xi, xj = _endpoint_probs(g, xhat)
    w = xi * xj + (1 - xi) * (1 - xj)
    return EdgeWeights(g, _floor(w), FLIPPED, horizon)


@dataclass(frozen=True, eq=False)
class WeightedLaplacian:
    weights: EdgeWeights = field(repr=False)
    degrees: np.ndarray
    laplacian: sp.csr_matrix = field(repr=False)
    normalized: sp.csr_matrix = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.degrees)

    @property
    def volume(self) -> float:
        return float(self.degrees.sum())


def build_laplacian(w: EdgeWeights) -> WeightedLaplacian:
    if w.flavor != FLIPPED:
        raise WeightError("partitioning uses flipped weights only")
    if not np.any(w.values > 0):
        raise WeightError("all edge weights are zero; nothing to partition")
    wm = w.matrix()
    d = np.asarray(wm.sum(axis=1)).ravel()
    lap = (sp.diags(d) - wm).tocsr()
    s = 1.0 / np.sqrt(np.maximum(d, DEGREE_FLOOR))
    scale = sp.diags(s)
    norm = (scale @ lap @ scale).tocsr()
    # enforce exact symmetry against rounding in the triple product
    norm = ((norm + norm.T) * 0.5).tocsr()
    return WeightedLaplacian(weights=w, degrees=d, laplacian=lap, normalized=norm)
