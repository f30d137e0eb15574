"""Anchored normalized-cut partitioning.

Anchor nodes are hard-labeled +1 (infected side) or -1 (healthy side) and
the relaxed NCut objective ``v' Lbar v`` is minimized subject to those labels,
either by the projected power method on the sphere ``|v|^2 = Vol(N)`` or by a
single augmented-Lagrangian (Uzawa) step with a large penalty.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .epidemic import as_initial, sources_of
from .graph import UNREACHABLE, ConvergenceError, Graph, multi_source_bfs
from .weights import EdgeWeights, WeightedLaplacian

INFECTED = 1
HEALTHY = -1

ANCHOR_FRACTION = 0.1
INFECTED_THRESHOLD = 0.5


class PartitionError(ValueError):
    pass


class NoHealthyNodes(PartitionError):
    """Every non-source node is predicted infected; there is nothing to protect."""


@dataclass(frozen=True)
class ConstraintSet:
    nodes: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.int64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if nodes.shape != labels.shape or nodes.ndim != 1:
            raise PartitionError("nodes and labels must be equal-length vectors")
        if len(np.unique(nodes)) != len(nodes):
            raise PartitionError("anchor nodes must be distinct")
        if not np.all(np.isin(labels, (INFECTED, HEALTHY))):
            raise PartitionError("anchor labels must be +1 or -1")
        if not (np.any(labels == INFECTED) and np.any(labels == HEALTHY)):
            raise PartitionError("need at least one infected and one healthy anchor")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_pairs(cls, pairs) -> "ConstraintSet":
        pairs = list(pairs)
        return cls(np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs]))

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def infected(self) -> np.ndarray:
        return self.nodes[self.labels == INFECTED]

    @property
    def healthy(self) -> np.ndarray:
        return self.nodes[self.labels == HEALTHY]

    def matrix(self, n: int) -> sp.csr_matrix:
        """One-hot constraint matrix B with one row per anchor."""
        m = len(self.nodes)
        return sp.csr_matrix((np.ones(m), (np.arange(m), self.nodes)), shape=(m, n))

    def origin_projection(self, n: int) -> np.ndarray:
        """``B'(BB')^{-1} c``; rows of B are orthonormal so this is c scattered."""
        n0 = np.zeros(n)
        n0[self.nodes] = self.labels
        return n0


@dataclass(frozen=True)
class SolverOptions:
    mu: float = 1e4
    alpha: float = 2.0
    tol: float = 1e-8
    max_iter: int = 100_000
    linear_solver: str = "cg"
    seed: int = 0

    def __post_init__(self):
        if not self.mu > 0:
            raise PartitionError("mu must be positive")
        if not self.alpha >= 2:
            raise PartitionError("alpha must be at least 2")
        if not self.tol > 0:
            raise PartitionError("tol must be positive")
        if self.linear_solver not in ("cg", "direct"):
            raise PartitionError(f"unknown linear solver {self.linear_solver!r}")


@dataclass(frozen=True, eq=False)
class PartitionResult:
    v: np.ndarray
    infected_side: np.ndarray
    cutset: np.ndarray
    solver: str
    objective: float
    iterations: int = 0
    perturbed: bool = False
    constraints: ConstraintSet | None = field(default=None, repr=False)

    @property
    def sides(self) -> np.ndarray:
        return np.where(self.infected_side, INFECTED, HEALTHY)

    def to_csv(self, nodes_path, cutset_path) -> None:
        with open(nodes_path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["node", "v", "side"])
            for i, (vi, s) in enumerate(zip(self.v, self.infected_side)):
                out.writerow([i, repr(float(vi)), "infected" if s else "healthy"])
        with open(cutset_path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["i", "j"])
            out.writerows(self.cutset.tolist())


def select_constraints(g: Graph, init, xhat, fraction: float = ANCHOR_FRACTION) -> ConstraintSet:
    """Pick anchor nodes from the sources and the predicted-healthy region.

    Infected anchors are the sources and their one-hop neighbors (neighbors
    dropped in descending id order past the cap). Healthy anchors are the
    predicted-healthy nodes farthest, in hops, from every source.
    """
    x0 = as_initial(init, g.n)
    xhat = np.asarray(xhat, dtype=float)
    sources = sources_of(x0)
    if len(sources) == 0:
        raise PartitionError("no infection sources")
    cap = int(np.floor(fraction * g.n))

    is_source = x0 == 1
    nbrs = np.unique(g.adjacency[sources].indices)
    nbrs = nbrs[~is_source[nbrs]]
    room = max(len(sources), cap - 1) - len(sources)
    infected = np.concatenate([sources, nbrs[:max(room, 0)]])

    candidate = xhat <= INFECTED_THRESHOLD
    candidate[infected] = False
    pool = np.flatnonzero(candidate)
    if len(pool) == 0:
        raise NoHealthyNodes("no node is predicted healthy at the patching delay")

    dist = multi_source_bfs(g, sources)[pool]
    far = np.where(dist == UNREACHABLE, np.iinfo(np.int64).max, dist)
    order = np.lexsort((pool, -far))
    k = max(1, cap - len(infected))
    healthy = pool[order[:k]]

    nodes = np.concatenate([infected, healthy])
    labels = np.concatenate([np.full(len(infected), INFECTED), np.full(len(healthy), HEALTHY)])
    return ConstraintSet(nodes, labels)


def extract_cutset(g: Graph, sides) -> np.ndarray:
    """Edges whose endpoints fall on different sides, as an ``(k, 2)`` array."""
    s = np.asarray(sides)
    if s.shape != (g.n,):
        raise PartitionError("side labels must cover every node")
    cross = s[g.edges[:, 0]] != s[g.edges[:, 1]]
    return g.edges[cross]


def ncut_value(w: EdgeWeights, sides) -> float:
    """Cut/Vol(U) + Cut/Vol(U^c), volumes being sums of generalized degrees."""
    g = w.graph
    s = np.asarray(sides).astype(bool) if np.asarray(sides).dtype == bool else np.asarray(sides) > 0
    if s.shape != (g.n,):
        raise PartitionError("side labels must cover every node")
    cross = s[g.edges[:, 0]] != s[g.edges[:, 1]]
    cut = float(w.values[cross].sum())
    d = np.zeros(g.n)
    np.add.at(d, g.edges[:, 0], w.values)
    np.add.at(d, g.edges[:, 1], w.values)
    vol_u, vol_c = float(d[s].sum()), float(d[~s].sum())
    if vol_u <= 0 or vol_c <= 0:
        raise PartitionError("a side has zero volume")
    return cut / vol_u + cut / vol_c


def _result(lap: WeightedLaplacian, cons: ConstraintSet, v: np.ndarray, solver: str,
            iterations: int = 0, perturbed: bool = False) -> PartitionResult:
    infected = v > 0
    return PartitionResult(
        v=v,
        infected_side=infected,
        cutset=extract_cutset(lap.weights.graph, infected),
        solver=solver,
        objective=float(v @ (lap.normalized @ v)),
        iterations=iterations,
        perturbed=perturbed,
        constraints=cons,
    )


def ppm_solve(lap: WeightedLaplacian, cons: ConstraintSet, opts: SolverOptions = SolverOptions()) -> PartitionResult:
    """Projected power method for max v'(alpha I - Lbar)v on {Bv = c, |v|^2 = Vol(N)}."""
    n = lap.n
    lbar = lap.normalized
    n0 = cons.origin_projection(n)
    free = np.ones(n, dtype=bool)
    free[cons.nodes] = False

    if not free.any():
        return _result(lap, cons, n0, "ppm")

    slack = lap.volume - float(n0 @ n0)
    if slack <= 0:
        raise PartitionError(
            f"infeasible: |n0|^2 = {n0 @ n0:.6g} is not below Vol(N) = {lap.volume:.6g}")
    gamma = np.sqrt(slack)

    def pm(x):
        y = opts.alpha * x - lbar @ x
        y[~free] = 0.0
        return y

    q = pm(n0)
    perturbed = False
    if np.linalg.norm(q) <= 1e-12 * np.linalg.norm(n0):
        perturbed = True
        rng = np.random.default_rng(opts.seed)
        xi = np.where(free, rng.standard_normal(n), 0.0)
        q = pm(n0 + 1e-6 * xi)
        if np.linalg.norm(q) == 0:
            q = xi
    v = gamma * q / np.linalg.norm(q) + n0

    for it in range(1, opts.max_iter + 1):
        q = pm(v)
        qn = np.linalg.norm(q)
        if qn == 0:
            raise ConvergenceError("projected operator annihilated the iterate")
        v_new = gamma * q / qn + n0
        if np.max(np.abs(v_new - v)) < opts.tol:
            return _result(lap, cons, v_new, "ppm", iterations=it, perturbed=perturbed)
        v = v_new
    raise ConvergenceError(f"PPM did not converge in {opts.max_iter} iterations")


def penalized_system(lap: WeightedLaplacian, cons: ConstraintSet, mu: float):
    """Matrix ``Lbar + mu B'B`` and right-hand side ``mu B'c``."""
    n = lap.n
    pin = np.zeros(n)
    pin[cons.nodes] = mu
    a = (lap.normalized + sp.diags(pin)).tocsr()
    return a, mu * cons.origin_projection(n)


def uzawa_solve(lap: WeightedLaplacian, cons: ConstraintSet, opts: SolverOptions = SolverOptions()) -> PartitionResult:
    """One augmented-Lagrangian step from a zero multiplier.

    Solves ``(Lbar + mu B'B) v = mu B'c``; the error against the exact
    constrained minimizer vanishes as mu grows.
    """
    a, rhs = penalized_system(lap, cons, opts.mu)
    n = lap.n
    if opts.linear_solver == "direct":
        v = spla.spsolve(a.tocsc(), rhs)
        iters = 0
    else:
        diag = a.diagonal()
        precond = sp.diags(1.0 / np.where(diag > 0, diag, 1.0))
        count = [0]

        def tick(_):
            count[0] += 1

        v, info = spla.cg(a, rhs, rtol=1e-10, atol=0.0, maxiter=10 * n, M=precond, callback=tick)
        iters = count[0]
        if info != 0:
            res = np.linalg.norm(a @ v - rhs) / np.linalg.norm(rhs)
            raise ConvergenceError(
                f"conjugate gradient stopped after {iters} iterations, relative residual {res:.3e}")
    return _result(lap, cons, np.asarray(v), "uzawa", iterations=iters)


def solve_kkt(lap: WeightedLaplacian, cons: ConstraintSet) -> tuple[np.ndarray, np.ndarray]:
    """Dense solve of the saddle system [[Lbar, B'], [B, 0]] [v; lam] = [0; c]."""
    n, m = lap.n, len(cons)
    b = cons.matrix(n).toarray()
    kkt = np.zeros((n + m, n + m))
    kkt[:n, :n] = lap.normalized.toarray()
    kkt[:n, n:] = b.T
    kkt[n:, :n] = b
    rhs = np.concatenate([np.zeros(n), cons.labels.astype(float)])
    sol = np.linalg.solve(kkt, rhs)
    return sol[:n], sol[n:]


SOLVERS = {"uzawa": uzawa_solve, "ppm": ppm_solve}
