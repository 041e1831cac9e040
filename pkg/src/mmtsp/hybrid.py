"""Use SOM solutions to start the EA population and the ACO pheromone level.

SOM runs spent here are auxiliary work: they do not count against the
search budget of the algorithm they seed.
"""

from __future__ import annotations

from typing import Literal

import numpy as np

from .routing import Solution, check_feasible, tour_cost
from .som import SomConfig, solve_som
from .tsplib import Instance


def rotation_offsets(n_ring: int, count: int) -> list[int]:
    """``round(j * n_ring / count)`` for j < count, rounding halves up."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return [((2 * j * n_ring + count) // (2 * count)) % n_ring for j in range(count)]


def _som_runs(inst: Instance, m: int, cfg: SomConfig, count: int,
              rng: np.random.Generator) -> list[Solution]:
    check_feasible(inst, m)
    offsets = rotation_offsets(cfg.d * inst.n, count)
    # one independent stream per SOM run, so run j does not depend on the others
    streams = rng.spawn(count)
    return [solve_som(inst, m, cfg, child, rot) for rot, child in zip(offsets, streams)]


def som_seed_population(inst: Instance, m: int, cfg: SomConfig, pop_size: int,
                        rng: np.random.Generator) -> list[Solution]:
    """``pop_size`` SOM solutions whose depot splices are rotated evenly around the ring."""
    return _som_runs(inst, m, cfg, pop_size, rng)


def pheromone_from_lengths(n: int, lengths) -> float:
    """Sum of ``1 / (n * L)`` over the given solution lengths."""
    lengths = np.asarray(lengths, dtype=float)
    if lengths.size == 0 or np.any(lengths <= 0):
        raise ValueError("need at least one positive length")
    return float(np.sum(1.0 / (n * lengths)))


def som_pheromone_seed(inst: Instance, m: int, cfg: SomConfig, N: int,
                       rng: np.random.Generator,
                       length: Literal["minsum", "minmax"] = "minsum") -> float:
    """Initial pheromone level built from ``N`` rotated SOM solutions.

    ``length`` picks which length of a SOM solution enters the sum: the total
    of all its tours (default) or its longest tour.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if length not in ("minsum", "minmax"):
        raise ValueError(f"length must be 'minsum' or 'minmax', got {length!r}")
    reduce = sum if length == "minsum" else max
    lengths = [reduce(tour_cost(inst, t) for t in sol.tours)
               for sol in _som_runs(inst, m, cfg, N, rng)]
    return pheromone_from_lengths(inst.n, lengths)
