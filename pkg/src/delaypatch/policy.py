"""Patch-target selection under a node budget.

Every policy skips the infection sources: patching an already infected node
can never succeed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .epidemic import as_initial, sources_of
from .graph import Graph, degrees, eigenvector_centrality
from .partition import PartitionResult

DELAYED = "delayed"
REACTIVE = "reactive"
DEGREE = "degree"
EIGEN = "eigen"
POLICIES = (DELAYED, REACTIVE, DEGREE, EIGEN)
FALLBACK_TAG = "delayed+reactive-fallback"


class PolicyError(ValueError):
    pass


@dataclass(frozen=True)
class Budget:
    fraction: float

    def __post_init__(self):
        if not 0 < self.fraction <= 1:
            raise PolicyError("budget fraction must lie in (0, 1]")

    def count(self, n: int) -> int:
        c = int(np.floor(self.fraction * n + 1e-9))
        if c < 1:
            raise PolicyError(f"budget {self.fraction} of {n} nodes is less than one patch")
        return c


@dataclass(frozen=True)
class PatchPlan:
    nodes: tuple[int, ...]
    budget: int
    policy: str

    def __post_init__(self):
        if len(self.nodes) > self.budget:
            raise PolicyError("plan exceeds its budget")
        if len(set(self.nodes)) != len(self.nodes):
            raise PolicyError("plan lists a node twice")

    def __len__(self) -> int:
        return len(self.nodes)

    def mask(self, n: int) -> np.ndarray:
        m = np.zeros(n, dtype=bool)
        m[list(self.nodes)] = True
        return m

    def to_dict(self) -> dict:
        return {"policy": self.policy, "budget": self.budget, "nodes": list(self.nodes)}

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def from_json(cls, path) -> "PatchPlan":
        with open(path) as fh:
            d = json.load(fh)
        return cls(tuple(d["nodes"]), d["budget"], d["policy"])

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("policy,budget,node\n")
            for i in self.nodes:
                fh.write(f"{self.policy},{self.budget},{i}\n")


def _top_k(scores: np.ndarray, eligible: np.ndarray, k: int) -> tuple[int, ...]:
    """Indices of the k largest eligible scores, ties to the smaller id."""
    idx = np.flatnonzero(eligible)
    order = np.lexsort((idx, -scores[idx]))
    return tuple(int(i) for i in idx[order[:k]])


def _non_sources(g: Graph, init) -> np.ndarray:
    return as_initial(init, g.n) == 0


def reactive_select(g: Graph, xhat, init, budget: Budget) -> PatchPlan:
    k = budget.count(g.n)
    return PatchPlan(_top_k(np.asarray(xhat, dtype=float), _non_sources(g, init), k), k, REACTIVE)


def degree_select(g: Graph, init, budget: Budget) -> PatchPlan:
    k = budget.count(g.n)
    return PatchPlan(_top_k(degrees(g).astype(float), _non_sources(g, init), k), k, DEGREE)


def eigen_select(g: Graph, init, budget: Budget, centrality=None) -> PatchPlan:
    k = budget.count(g.n)
    if centrality is None:
        centrality = eigenvector_centrality(g)
    return PatchPlan(_top_k(np.asarray(centrality, dtype=float), _non_sources(g, init), k), k, EIGEN)


def delayed_select(g: Graph, part: PartitionResult, budget: Budget, init, xhat=None) -> PatchPlan:
    """Greedy cover of the cut-set by healthy-side endpoints, then expansion.

    Repeatedly patch the highest-degree healthy-side endpoint of the remaining
    cut edges and drop the edges it covers. Leftover budget goes to unselected
    one-hop neighbors of the plan, one ring at a time, by descending degree.
    An empty cut-set falls back to the reactive ranking when ``xhat`` is given.
    """
    k = budget.count(g.n)
    is_source = ~_non_sources(g, init)
    deg = degrees(g)

    cut = part.cutset
    if len(cut) == 0:
        if xhat is None:
            raise PolicyError("empty cut-set and no infection forecast to fall back on")
        plan = reactive_select(g, xhat, init, budget)
        return PatchPlan(plan.nodes, k, FALLBACK_TAG)

    healthy = ~np.asarray(part.infected_side, dtype=bool)
    # the healthy-side endpoint of each crossing edge
    ends = np.where(healthy[cut[:, 0]], cut[:, 0], cut[:, 1])
    ends = ends[~is_source[ends]]

    selected: list[int] = []
    chosen = np.zeros(g.n, dtype=bool)
    remaining = np.bincount(ends, minlength=g.n)
    while len(selected) < k:
        cand = np.flatnonzero(remaining > 0)
        if len(cand) == 0:
            break
        best = int(cand[np.lexsort((cand, -deg[cand]))[0]])
        selected.append(best)
        chosen[best] = True
        remaining[best] = 0

    frontier = list(selected)
    while len(selected) < k and frontier:
        ring = np.zeros(g.n, dtype=bool)
        for u in frontier:
            ring[g.neighbors(u)] = True
        ring &= ~chosen & ~is_source
        pool = np.flatnonzero(ring)
        if len(pool) == 0:
            break
        take = pool[np.lexsort((pool, -deg[pool]))][: k - len(selected)]
        selected.extend(int(i) for i in take)
        chosen[take] = True
        frontier = take.tolist()

    return PatchPlan(tuple(selected), k, DELAYED)
