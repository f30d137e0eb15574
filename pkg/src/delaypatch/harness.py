"""Monte Carlo evaluation of patching policies under a patching delay.

A patched node stays susceptible on [0, T). At T, patched nodes that are
still healthy become immune and all their edges go dead; patched nodes
already infected keep spreading. All policies in a trial share the sources
and the epidemic randomness (common random numbers).
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from .epidemic import (EpidemicParams, draw_transmission_delays, first_passage_times,
                       initial_from_sources, sources_of, transient_bound)
from .graph import Graph, SbmSpec, eigenvector_centrality, generate_sbm, load_edgelist
from .partition import SOLVERS, NoHealthyNodes, SolverOptions, select_constraints
from .policy import (DEGREE, DELAYED, EIGEN, POLICIES, REACTIVE, Budget, PatchPlan,
                     degree_select, delayed_select, eigen_select, reactive_select)
from .weights import build_laplacian, flipped_weights

log = logging.getLogger(__name__)


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class PatchedRun:
    """Outcome of one epidemic with a patch plan applied."""

    infection_times: np.ndarray
    immunized: np.ndarray
    patched_infected: np.ndarray

    def counts(self, grid: np.ndarray) -> np.ndarray:
        t = np.sort(self.infection_times[np.isfinite(self.infection_times)])
        return np.searchsorted(t, grid, side="right").astype(np.int64)


def simulate_patched(g: Graph, init, plan_mask: np.ndarray, beta: float, delay: float,
                     rng: np.random.Generator) -> PatchedRun:
    """Exact SI run in which ``plan_mask`` nodes turn immune at ``delay`` if healthy."""
    src = sources_of(init)
    if len(src) != int(np.sum(init)) or np.any(np.asarray(plan_mask)[src]):
        raise ExperimentError("patch plan includes an infection source")
    delays = draw_transmission_delays(g, beta, rng)
    times = first_passage_times(delays, src)
    # infections before the delay are unaffected by patching
    immune = plan_mask & (times >= delay)
    if immune.any():
        keep = sp.diags((~immune).astype(float))
        cut = (keep @ delays @ keep).tocsr()
        cut.eliminate_zeros()
        times = first_passage_times(cut, src)
        times[immune] = np.inf
    return PatchedRun(
        infection_times=times,
        immunized=np.flatnonzero(immune),
        patched_infected=np.flatnonzero(plan_mask & ~immune),
    )


def time_grid(horizon: float, sample_points: int = 200) -> np.ndarray:
    return np.linspace(0.0, horizon, sample_points)


def run_trial(g: Graph, init, plan: PatchPlan, params: EpidemicParams, delay: float,
              seed=None, grid: np.ndarray | None = None) -> np.ndarray:
    """Infected count at each grid time for one patched epidemic."""
    if grid is None:
        grid = time_grid(params.horizon)
    run = simulate_patched(g, np.asarray(init), plan.mask(g.n), params.beta, delay,
                           np.random.default_rng(seed))
    return run.counts(grid)


def default_source_count(n: int) -> int:
    return 1 if n <= 2000 else 5


def choose_sources(g: Graph, n_sources: int | None = None, seed=None) -> np.ndarray:
    """Binary initial condition with ``n_sources`` uniformly drawn infected nodes."""
    if n_sources is None:
        n_sources = default_source_count(g.n)
    if not 1 <= n_sources < g.n:
        raise ExperimentError(f"need 1 <= n_sources < n, got {n_sources} for n={g.n}")
    rng = np.random.default_rng(seed)
    return initial_from_sources(g.n, rng.choice(g.n, size=n_sources, replace=False))


@dataclass(frozen=True)
class ExperimentConfig:
    graph_path: str | None = None
    sbm: SbmSpec | None = None
    beta: float = 0.01
    T: float = 0.0
    budget: float = 0.2
    n_sources: int | None = None
    source_ids: tuple[int, ...] | None = None
    trials: int = 100
    horizon: float = 1000.0
    sample_points: int = 200
    seed: int = 0
    policies: tuple[str, ...] = POLICIES
    solver: str = "uzawa"
    mu: float = 1e4
    workers: int = 1

    def __post_init__(self):
        if (self.graph_path is None) == (self.sbm is None):
            raise ExperimentError("give exactly one graph source: an edge list or an SBM spec")
        if self.trials < 1:
            raise ExperimentError("trials must be at least 1")
        if not 0 <= self.T <= self.horizon:
            raise ExperimentError("need 0 <= T <= horizon")
        if self.sample_points < 2:
            raise ExperimentError("sample_points must be at least 2")
        if not self.policies:
            raise ExperimentError("no policies selected")
        unknown = set(self.policies) - set(POLICIES)
        if unknown:
            raise ExperimentError(f"unknown policies: {sorted(unknown)}")
        if self.solver not in SOLVERS:
            raise ExperimentError(f"unknown solver {self.solver!r}")
        Budget(self.budget)
        EpidemicParams(self.beta, self.horizon)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["policies"] = list(self.policies)
        if self.source_ids is not None:
            d["source_ids"] = list(self.source_ids)
        return d

    def build_graph(self) -> Graph:
        if self.sbm is not None:
            return generate_sbm(self.sbm)
        return load_edgelist(self.graph_path)


@dataclass
class PolicyCurve:
    mean: np.ndarray
    std: np.ndarray
    counts: np.ndarray = field(repr=False)
    immunized: np.ndarray = field(repr=False)
    patched_infected: np.ndarray = field(repr=False)
    tags: list[str] = field(default_factory=list, repr=False)

    @property
    def finals(self) -> np.ndarray:
        return self.counts[:, -1]


@dataclass
class TrajectoryResult:
    grid: np.ndarray
    curves: dict[str, PolicyCurve]
    metadata: dict

    @property
    def policies(self) -> list[str]:
        return list(self.curves)

    def final_mean(self, policy: str) -> float:
        return float(self.curves[policy].mean[-1])


@dataclass
class _TrialOutput:
    counts: dict[str, np.ndarray]
    immunized: dict[str, int]
    patched_infected: dict[str, int]
    tags: dict[str, str]


def plan_policies(g: Graph, init, xhat: np.ndarray, policies, budget: Budget,
                  solver: str = "uzawa", mu: float = 1e4,
                  centrality: np.ndarray | None = None) -> dict[str, PatchPlan]:
    """Patch plans for each named policy. Raises NoHealthyNodes."""
    plans = {}
    for name in policies:
        if name == DELAYED:
            lap = build_laplacian(flipped_weights(g, xhat))
            cons = select_constraints(g, init, xhat)
            part = SOLVERS[solver](lap, cons, SolverOptions(mu=mu))
            plans[name] = delayed_select(g, part, budget, init, xhat)
        elif name == REACTIVE:
            plans[name] = reactive_select(g, xhat, init, budget)
        elif name == DEGREE:
            plans[name] = degree_select(g, init, budget)
        elif name == EIGEN:
            plans[name] = eigen_select(g, init, budget, centrality)
    return plans


def _trial(g: Graph, cfg: ExperimentConfig, index: int, grid: np.ndarray,
           centrality: np.ndarray | None) -> _TrialOutput:
    source_seq, epi_seq = np.random.SeedSequence([cfg.seed, index]).spawn(2)
    if cfg.source_ids is not None:
        init = initial_from_sources(g.n, cfg.source_ids)
    else:
        init = choose_sources(g, cfg.n_sources, np.random.default_rng(source_seq))
    xhat = transient_bound(g, init, EpidemicParams(cfg.beta, cfg.T))

    try:
        plans = plan_policies(g, init, xhat, cfg.policies, Budget(cfg.budget), cfg.solver,
                              cfg.mu, centrality)
    except NoHealthyNodes:
        log.info("trial %d: infection predicted to cover the graph", index)
        full = np.full(len(grid), g.n, dtype=np.int64)
        full[0] = int(np.sum(init))
        zero = {p: 0 for p in cfg.policies}
        return _TrialOutput({p: full.copy() for p in cfg.policies}, zero, dict(zero),
                            {p: "no-healthy-nodes" for p in cfg.policies})
    except Exception as exc:
        raise ExperimentError(f"trial {index}: {exc}") from exc

    counts, immunized, lost, tags = {}, {}, {}, {}
    for name, plan in plans.items():
        # same generator state for every policy: paired comparison
        rng = np.random.default_rng(epi_seq)
        run = simulate_patched(g, init, plan.mask(g.n), cfg.beta, cfg.T, rng)
        counts[name] = run.counts(grid)
        immunized[name] = len(run.immunized)
        lost[name] = len(run.patched_infected)
        tags[name] = plan.policy
    return _TrialOutput(counts, immunized, lost, tags)


def run_experiment(cfg: ExperimentConfig, graph: Graph | None = None) -> TrajectoryResult:
    g = graph if graph is not None else cfg.build_graph()
    if not g.is_connected():
        log.warning("graph is disconnected; eigenvector centrality may be ill-defined")
    grid = time_grid(cfg.horizon, cfg.sample_points)
    centrality = eigenvector_centrality(g) if EIGEN in cfg.policies else None

    def work(i):
        return _trial(g, cfg, i, grid, centrality)

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            outputs = list(pool.map(work, range(cfg.trials)))
    else:
        outputs = [work(i) for i in range(cfg.trials)]

    curves = {}
    for name in cfg.policies:
        counts = np.stack([o.counts[name] for o in outputs]).astype(float)
        curves[name] = PolicyCurve(
            mean=counts.mean(axis=0),
            std=counts.std(axis=0, ddof=1) if cfg.trials > 1 else np.zeros(len(grid)),
            counts=counts,
            immunized=np.array([o.immunized[name] for o in outputs]),
            patched_infected=np.array([o.patched_infected[name] for o in outputs]),
            tags=[o.tags[name] for o in outputs],
        )
    meta = {"config": cfg.to_dict(), "n": g.n, "m": g.m}
    return TrajectoryResult(grid=grid, curves=curves, metadata=meta)
