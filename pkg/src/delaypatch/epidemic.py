"""SI dynamics on a graph.

Exact stochastic simulation, the mean-field ODE, the linearized bound
``exp(beta t A) x0``, and the transient bound ``1 - exp(-y_hat(t))``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from .graph import Graph


class EpidemicError(ValueError):
    pass


@dataclass(frozen=True)
class EpidemicParams:
    beta: float
    horizon: float

    def __post_init__(self):
        if not self.beta > 0:
            raise EpidemicError("beta must be positive")
        if not self.horizon >= 0:
            raise EpidemicError("horizon must be nonnegative")


def as_initial(x0, n: int | None = None) -> np.ndarray:
    """Validate a binary initial condition and return it as a float vector."""
    x = np.asarray(x0, dtype=float)
    if x.ndim != 1:
        raise EpidemicError("initial condition must be a vector")
    if n is not None and x.size != n:
        raise EpidemicError(f"initial condition has length {x.size}, graph has {n} nodes")
    if not np.all((x == 0) | (x == 1)):
        raise EpidemicError("initial condition must be binary")
    return x


def initial_from_sources(n: int, sources) -> np.ndarray:
    idx = np.asarray(list(sources), dtype=np.int64)
    if idx.size == 0:
        raise EpidemicError("need at least one infection source")
    if idx.min() < 0 or idx.max() >= n:
        raise EpidemicError(f"source ids must lie in [0, {n})")
    x = np.zeros(n)
    x[idx] = 1.0
    return x


def sources_of(x0) -> np.ndarray:
    return np.flatnonzero(np.asarray(x0) == 1)


@dataclass(frozen=True)
class InfectionTrace:
    """Time-ordered infections after t=0. ``initial`` holds the sources."""

    times: np.ndarray
    nodes: np.ndarray
    initial: np.ndarray

    @property
    def events(self) -> list[tuple[float, int]]:
        return list(zip(self.times.tolist(), self.nodes.tolist()))

    def infected_at(self, t: float) -> np.ndarray:
        x = self.initial.astype(bool).copy()
        x[self.nodes[self.times <= t]] = True
        return x

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "node"])
            for t, i in zip(self.times, self.nodes):
                w.writerow([repr(float(t)), int(i)])


def draw_transmission_delays(g: Graph, beta: float, rng: np.random.Generator) -> sp.csr_matrix:
    """One Exp(beta) clock per directed edge, as a CSR matrix with A's pattern.

    Entry (i, j) is how long infected i takes to infect j. By memorylessness
    these clocks reproduce the continuous-time SI chain exactly.
    """
    a = g.adjacency
    delays = rng.exponential(1.0 / beta, size=a.nnz)
    # exact zeros would be dropped as structural zeros by csgraph
    np.maximum(delays, np.finfo(float).tiny, out=delays)
    return sp.csr_matrix((delays, a.indices.copy(), a.indptr.copy()), shape=a.shape)


def first_passage_times(delays: sp.csr_matrix, sources: np.ndarray) -> np.ndarray:
    """Infection time of every node (inf if never reached)."""
    if len(sources) == 0:
        return np.full(delays.shape[0], np.inf)
    return dijkstra(delays, directed=True, indices=sources, min_only=True)


def simulate_si(g: Graph, init, params: EpidemicParams, seed=None) -> InfectionTrace:
    x0 = as_initial(init, g.n)
    rng = np.random.default_rng(seed)
    delays = draw_transmission_delays(g, params.beta, rng)
    times = first_passage_times(delays, sources_of(x0))
    hit = np.flatnonzero((x0 == 0) & (times <= params.horizon))
    order = np.lexsort((hit, times[hit]))
    hit = hit[order]
    return InfectionTrace(times=times[hit], nodes=hit, initial=x0.astype(np.int8))


def _si_rhs(a: sp.csr_matrix, beta: float, x: np.ndarray) -> np.ndarray:
    return beta * (1.0 - x) * (a @ x)


def solve_si_mean_field(g: Graph, init, params: EpidemicParams, dt: float | None = None) -> np.ndarray:
    """Integrate the SI mean-field ODE to ``params.horizon`` with classical RK4."""
    x = as_initial(init, g.n).copy()
    if dt is None:
        dt = 0.01 / params.beta
    if not dt > 0:
        raise EpidemicError("dt must be positive")
    a = g.adjacency
    beta = params.beta
    steps = int(math.ceil(params.horizon / dt - 1e-12))
    if steps == 0:
        return x
    h = params.horizon / steps
    for _ in range(steps):
        k1 = _si_rhs(a, beta, x)
        k2 = _si_rhs(a, beta, x + 0.5 * h * k1)
        k3 = _si_rhs(a, beta, x + 0.5 * h * k2)
        k4 = _si_rhs(a, beta, x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return np.clip(x, 0.0, 1.0)


def linear_bound(g: Graph, init, params: EpidemicParams, tol: float = 1e-14) -> np.ndarray:
    """``exp(beta * horizon * A) @ x0`` by Taylor series with scaling and squaring.

    Not clamped: entries grow without limit and may exceed 1.
    """
    x = np.asarray(init, dtype=float)
    if x.size != g.n:
        raise EpidemicError("initial condition length does not match graph")
    s = params.beta * params.horizon
    if s == 0:
        return x.copy()
    a = g.adjacency
    norm1 = float(abs(a).sum(axis=0).max()) if a.nnz else 0.0
    steps = max(1, int(math.ceil(s * norm1)))
    h = s / steps
    for _ in range(steps):
        term = x
        acc = x.copy()
        for k in range(1, 200):
            term = (h / k) * (a @ term)
            acc += term
            if np.max(np.abs(term)) <= tol * max(1.0, np.max(np.abs(acc))):
                break
        x = acc
    return x


def transient_log_bound(g: Graph, init, params: EpidemicParams,
                        tol: float = 1e-12, max_terms: int = 200) -> np.ndarray:
    """The exponent ``y_hat(t)``; ``+inf`` on initially infected nodes."""
    x0 = as_initial(init, g.n)
    s = params.beta * params.horizon
    a = g.adjacency
    healthy = 1.0 - x0
    y = np.zeros(g.n)
    if s > 0:
        u = a @ x0
        coef = s
        for k in range(max_terms):
            term = coef * u
            y += term
            if np.max(np.abs(term), initial=0.0) < tol:
                break
            u = a @ (healthy * u)
            coef *= s / (k + 2)
    y[x0 == 1] = np.inf
    return y


def transient_bound(g: Graph, init, params: EpidemicParams,
                    tol: float = 1e-12, max_terms: int = 200) -> np.ndarray:
    """Upper bound ``x_hat(t) = 1 - exp(-y_hat(t))`` on each infection probability."""
    y = transient_log_bound(g, init, params, tol=tol, max_terms=max_terms)
    xhat = np.ones(g.n)
    finite = np.isfinite(y)
    xhat[finite] = -np.expm1(-y[finite])
    return xhat
