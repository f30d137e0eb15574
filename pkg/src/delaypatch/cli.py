"""Command-line entry point.

Every subcommand accepts ``--config FILE``: a flat ``key = value`` file whose
keys are flag names without the leading dashes (``sbm-n = 1000``). Flags
given on the command line always override the file.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .epidemic import EpidemicParams, initial_from_sources, transient_bound
from .graph import SbmSpec, generate_sbm, load_edgelist, write_edgelist
from .harness import (ExperimentConfig, choose_sources, plan_policies, run_experiment,
                      simulate_patched, time_grid)
from .partition import SOLVERS, SolverOptions, select_constraints
from .policy import POLICIES, Budget, PatchPlan
from .report import emit_plot, read_results, write_results
from .weights import build_laplacian, flipped_weights

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("delaypatch")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def read_config(path) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.lstrip("-")] = value
    return values


def _add_graph(p):
    g = p.add_argument_group("graph source")
    g.add_argument("--graph", help="SNAP edge-list file")
    g.add_argument("--sbm-n", type=int, help="SBM node count")
    g.add_argument("--sbm-k", type=int, help="SBM community count")
    g.add_argument("--sbm-degree", type=float, default=8.0)
    g.add_argument("--sbm-ratio", type=float, default=10.0,
                   help="intra- to inter-community edge probability ratio")


def _add_sources(p):
    p.add_argument("--sources", type=int, help="number of random infection sources")
    p.add_argument("--source-ids", help="comma-separated explicit source node ids")


def _add_epidemic(p, horizon=False):
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--T", type=float, required=True, help="patching delay")
    if horizon:
        p.add_argument("--horizon", type=float, default=1000.0)


def _add_solver(p):
    p.add_argument("--solver", choices=sorted(SOLVERS), default="uzawa")
    p.add_argument("--mu", type=float, default=1e4)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="delaypatch", description="Delayed-patching malware control on networks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="key = value file; flags override it")
        p.add_argument("--seed", type=int)
        return p

    p = command("generate", "sample an SBM graph and write its edge list")
    _add_graph(p)
    p.add_argument("--out", required=True)

    p = command("bound", "print the transient infection bound at the patching delay")
    _add_graph(p)
    _add_sources(p)
    _add_epidemic(p)
    p.add_argument("--out", help="write node,xhat CSV here instead of stdout")

    p = command("partition", "anchored normalized cut at the patching delay")
    _add_graph(p)
    _add_sources(p)
    _add_epidemic(p)
    _add_solver(p)
    p.add_argument("--out", required=True, help="output prefix for _nodes.csv and _cutset.csv")

    p = command("select", "compute a patch plan")
    _add_graph(p)
    _add_sources(p)
    _add_epidemic(p)
    _add_solver(p)
    p.add_argument("--policy", choices=POLICIES, default="delayed")
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--out", required=True, help="plan JSON")

    p = command("simulate", "run one patched epidemic")
    _add_graph(p)
    _add_sources(p)
    _add_epidemic(p, horizon=True)
    p.add_argument("--plan", help="plan JSON from `select`; omit for no patching")
    p.add_argument("--sample-points", type=int, default=200)
    p.add_argument("--out", help="time,infected CSV")

    p = command("experiment", "Monte Carlo comparison of policies")
    _add_graph(p)
    _add_sources(p)
    _add_epidemic(p, horizon=True)
    _add_solver(p)
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--sample-points", type=int, default=200)
    p.add_argument("--policies", default=",".join(POLICIES))
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--svg", action="store_true", help="also write results.svg")

    p = command("plot", "render a results CSV as SVG")
    p.add_argument("--csv", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--title")
    return parser


COMMANDS = ("generate", "bound", "partition", "select", "simulate", "experiment", "plot")


def _config_path(argv) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def parse(argv) -> argparse.Namespace:
    """Parse argv with ``--config`` values spliced in ahead of the explicit flags.

    The file's flags go right after the subcommand, so any repeated flag on
    the command line wins (argparse keeps the last occurrence).
    """
    argv = list(argv)
    path = _config_path(argv)
    if path is not None:
        try:
            values = read_config(path)
        except OSError as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        pos = next((i for i, tok in enumerate(argv) if tok in COMMANDS), None)
        if pos is not None:
            flat = []
            for key, value in values.items():
                flat += [f"--{key}"] if value.lower() == "true" else [f"--{key}", value]
            argv = argv[:pos + 1] + flat + argv[pos + 1:]
    return build_parser().parse_args(argv)


def _seed(args) -> int:
    if args.seed is None:
        args.seed = int(np.random.SeedSequence().generate_state(1)[0])
        log.info("drew seed %d", args.seed)
    return args.seed


def _sbm_spec(args) -> SbmSpec | None:
    if args.sbm_n is None and args.sbm_k is None:
        return None
    if args.sbm_n is None or args.sbm_k is None:
        raise UsageError("--sbm-n and --sbm-k go together")
    return SbmSpec(args.sbm_n, args.sbm_k, args.sbm_degree, args.sbm_ratio, _seed(args))


def _graph(args):
    spec = _sbm_spec(args)
    if (spec is None) == (args.graph is None):
        raise UsageError("give exactly one graph source: --graph or --sbm-n/--sbm-k")
    return load_edgelist(args.graph) if spec is None else generate_sbm(spec)


def _source_ids(args):
    if args.source_ids:
        try:
            return tuple(int(s) for s in args.source_ids.split(",") if s.strip())
        except ValueError:
            raise UsageError("--source-ids must be comma-separated integers") from None
    return None


def _init(args, g):
    ids = _source_ids(args)
    if ids is not None:
        return initial_from_sources(g.n, ids)
    return choose_sources(g, args.sources, np.random.default_rng([_seed(args), 1]))


def _config(args) -> ExperimentConfig:
    spec = _sbm_spec(args)
    if (spec is None) == (args.graph is None):
        raise UsageError("give exactly one graph source: --graph or --sbm-n/--sbm-k")
    policies = tuple(p.strip() for p in args.policies.split(",") if p.strip())
    return ExperimentConfig(
        graph_path=args.graph, sbm=spec, beta=args.beta, T=args.T, budget=args.budget,
        n_sources=args.sources, source_ids=_source_ids(args), trials=args.trials,
        horizon=args.horizon, sample_points=args.sample_points, seed=_seed(args),
        policies=policies, solver=args.solver, mu=args.mu, workers=args.workers,
    )


def _partition(args, g, init, xhat):
    lap = build_laplacian(flipped_weights(g, xhat, args.T))
    cons = select_constraints(g, init, xhat)
    return SOLVERS[args.solver](lap, cons, SolverOptions(mu=args.mu))


def run(args) -> int:
    cmd = args.command
    if cmd == "plot":
        emit_plot(read_results(args.csv), args.out, title=args.title)
        return EXIT_OK

    if cmd == "experiment":
        cfg = _config(args)
        res = run_experiment(cfg)
        out = Path(args.out)
        csv_path, json_path = write_results(res, out / "results.csv")
        if args.svg:
            emit_plot(res, out / "results.svg")
        print(f"n={res.metadata['n']} trials={cfg.trials} seed={cfg.seed}")
        for name in res.policies:
            print(f"{name:>10}: mean final infected {res.final_mean(name):.1f}")
        print(f"wrote {csv_path} and {json_path}")
        return EXIT_OK

    g = _graph(args)
    if cmd == "generate":
        write_edgelist(g, args.out)
        print(f"wrote {g.n} nodes, {g.m} edges to {args.out}")
        return EXIT_OK

    init = _init(args, g)
    if cmd == "simulate":
        plan = PatchPlan.from_json(args.plan) if args.plan else PatchPlan((), 0, "none")
        run_ = simulate_patched(g, init, plan.mask(g.n), args.beta, args.T,
                                np.random.default_rng([_seed(args), 2]))
        grid = time_grid(args.horizon, args.sample_points)
        counts = run_.counts(grid)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write("time,infected\n")
                for t, c in zip(grid, counts):
                    fh.write(f"{t!r},{c}\n")
        print(f"final infected {counts[-1]} of {g.n}; immunized {len(run_.immunized)}, "
              f"patched but infected {len(run_.patched_infected)}")
        return EXIT_OK

    xhat = transient_bound(g, init, EpidemicParams(args.beta, args.T))
    if cmd == "bound":
        lines = [f"{i},{x!r}" for i, x in enumerate(xhat.tolist())]
        if args.out:
            Path(args.out).write_text("node,xhat\n" + "\n".join(lines) + "\n")
        else:
            print("\n".join(lines))
        return EXIT_OK

    if cmd == "partition":
        part = _partition(args, g, init, xhat)
        part.to_csv(f"{args.out}_nodes.csv", f"{args.out}_cutset.csv")
        print(f"infected side {int(part.infected_side.sum())} nodes, cut-set {len(part.cutset)} edges")
        return EXIT_OK

    if cmd == "select":
        plan = plan_policies(g, init, xhat, [args.policy], Budget(args.budget),
                             args.solver, args.mu)[args.policy]
        plan.to_json(args.out)
        print(f"{plan.policy}: {len(plan)} of {plan.budget} patches -> {args.out}")
        return EXIT_OK

    raise UsageError(f"unknown command {cmd}")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except UsageError as exc:
        build_parser().print_usage(sys.stderr)
        print(f"delaypatch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"delaypatch: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
