"""MinMax single-depot multiple-TSP solvers: SOM, EA, ACS and their hybrids."""

from .aco import AcoConfig, run_acs
from .bench import ExperimentConfig, RunStats, emit_report, run_experiment, t_test
from .evo import EaConfig, run_ea
from .hybrid import som_pheromone_seed, som_seed_population
from .local_search import two_opt
from .routing import (
    InfeasibleError,
    InvalidSolution,
    SearchResult,
    Solution,
    brute_force_minmax,
    minmax_cost,
    minsum_cost,
    tour_cost,
    validate,
)
from .som import SomConfig, solve_som
from .tsplib import Instance, TsplibError, load_instance, parse_tsplib, read_instance

__version__ = "0.1.0"

__all__ = [
    "AcoConfig", "EaConfig", "ExperimentConfig", "InfeasibleError", "Instance",
    "InvalidSolution", "RunStats", "SearchResult", "Solution", "SomConfig", "TsplibError",
    "brute_force_minmax", "emit_report", "load_instance", "minmax_cost", "minsum_cost",
    "parse_tsplib", "read_instance", "run_acs", "run_ea", "run_experiment",
    "som_pheromone_seed", "som_seed_population", "solve_som", "t_test", "tour_cost",
    "two_opt", "validate",
]
