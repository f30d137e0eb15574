"""Delayed-patching malware control on networks."""

from .epidemic import (EpidemicParams, InfectionTrace, linear_bound, simulate_si,
                       solve_si_mean_field, transient_bound)
from .graph import (UNREACHABLE, Graph, SbmSpec, degrees, eigenvector_centrality,
                    generate_sbm, load_edgelist, multi_source_bfs)
from .harness import (ExperimentConfig, TrajectoryResult, choose_sources, run_experiment,
                      run_trial)
from .partition import (ConstraintSet, PartitionResult, SolverOptions, extract_cutset,
                        ncut_value, ppm_solve, select_constraints, uzawa_solve)
from .policy import (Budget, PatchPlan, degree_select, delayed_select, eigen_select,
                     reactive_select)
from .report import emit_plot, write_results
from .weights import EdgeWeights, WeightedLaplacian, build_laplacian, critical_weights, flipped_weights

__version__ = "0.1.0"
