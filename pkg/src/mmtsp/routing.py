"""Multi-tour solutions, MinMax/MinSum objectives and an exhaustive oracle."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from .tsplib import Instance

Tour = tuple[int, ...]


class InvalidSolution(ValueError):
    """A solution is not an exact partition of the customers into non-empty tours."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


class InfeasibleError(ValueError):
    """The requested number of salesmen cannot each get a non-empty tour."""


@dataclass(frozen=True)
class Solution:
    """``m`` depot-free tours; the depot is implied at both ends of each."""

    tours: tuple[Tour, ...]

    def __init__(self, tours: Iterable[Iterable[int]]):
        object.__setattr__(self, "tours", tuple(tuple(int(c) for c in t) for t in tours))

    @property
    def m(self) -> int:
        return len(self.tours)

    def to_dict(self, inst: Instance) -> dict:
        costs = [tour_cost(inst, t) for t in self.tours]
        return {
            "tours": [[inst.labels[c] for c in t] for t in self.tours],
            "tour_costs": costs,
            "minmax": max(costs),
            "minsum": sum(costs),
        }

    @classmethod
    def from_dict(cls, data: dict, inst: Instance) -> "Solution":
        index = {label: i for i, label in enumerate(inst.labels)}
        return cls([index[label] for label in t] for t in data["tours"])

    def to_json(self, inst: Instance) -> str:
        return json.dumps(self.to_dict(inst))


def check_feasible(inst: Instance, m: int) -> None:
    if m < 1:
        raise InfeasibleError(f"need at least one salesman, got m={m}")
    if m > inst.n - 1:
        raise InfeasibleError(
            f"m={m} salesmen cannot all get a city: only {inst.n - 1} non-depot cities"
        )


@njit(cache=True)
def route_cost(dist, depot, seq):
    """Closed depot -> seq -> depot length; 0 for an empty sequence."""
    k = seq.shape[0]
    if k == 0:
        return 0.0
    total = dist[depot, seq[0]] + dist[seq[k - 1], depot]
    for i in range(k - 1):
        total += dist[seq[i], seq[i + 1]]
    return total


@njit(cache=True)
def packed_costs(dist, depot, order, lens, out):
    """Per-tour costs of a packed genome written into ``out``; returns the max."""
    start = 0
    worst = 0.0
    for t in range(lens.shape[0]):
        c = route_cost(dist, depot, order[start : start + lens[t]])
        out[t] = c
        if c > worst:
            worst = c
        start += lens[t]
    return worst


def pack(sol: Solution) -> tuple[np.ndarray, np.ndarray]:
    """Flatten to (concatenated order, tour lengths)."""
    order = np.fromiter((c for t in sol.tours for c in t), dtype=np.int64)
    lens = np.array([len(t) for t in sol.tours], dtype=np.int64)
    return order, lens


def unpack(order: np.ndarray, lens: np.ndarray) -> Solution:
    bounds = np.concatenate(([0], np.cumsum(lens)))
    return Solution(order[bounds[i] : bounds[i + 1]].tolist() for i in range(len(lens)))


def tour_cost(inst: Instance, tour: Sequence[int]) -> float:
    seq = np.asarray(tour, dtype=np.int64)
    if seq.size and (seq.min() < 0 or seq.max() >= inst.n):
        raise IndexError(f"tour references a city outside 0..{inst.n - 1}")
    return float(route_cost(inst.dist, inst.depot, seq))


def validate(inst: Instance, sol: Solution) -> list[str]:
    """Return the list of violations; empty means the solution is valid."""
    problems = []
    if sol.m < 1:
        problems.append("solution has no tours")
    seen: dict[int, int] = {}
    for k, tour in enumerate(sol.tours):
        if not tour:
            problems.append(f"tour {k} is empty")
        for c in tour:
            if not 0 <= c < inst.n:
                problems.append(f"tour {k} references unknown city {c}")
                continue
            if c == inst.depot:
                problems.append(f"tour {k} contains the depot {inst.labels[c]}")
                continue
            if c in seen:
                problems.append(
                    f"city {inst.labels[c]} appears in tour {seen[c]} and tour {k}"
                    if seen[c] != k
                    else f"city {inst.labels[c]} appears twice in tour {k}"
                )
            else:
                seen[c] = k
    missing = [inst.labels[c] for c in inst.customers if c not in seen]
    if missing:
        problems.append(f"cities never visited: {missing}")
    return problems


def _checked(inst: Instance, sol: Solution) -> list[float]:
    problems = validate(inst, sol)
    if problems:
        raise InvalidSolution(problems)
    return [tour_cost(inst, t) for t in sol.tours]


def minmax_cost(inst: Instance, sol: Solution) -> float:
    return max(_checked(inst, sol))


def minsum_cost(inst: Instance, sol: Solution) -> float:
    return sum(_checked(inst, sol))


BRUTE_FORCE_LIMIT = 9


def _best_subset_tours(inst: Instance, customers: Sequence[int], max_size: int):
    """Optimal closed tour for every customer subset up to ``max_size``, by enumeration."""
    dist, depot = inst.dist, inst.depot
    best: dict[int, tuple[float, tuple[int, ...]]] = {}
    for size in range(1, max_size + 1):
        for subset in itertools.combinations(range(len(customers)), size):
            cities = [customers[i] for i in subset]
            perms = np.array(list(itertools.permutations(cities)), dtype=np.int64)
            if size > 1:
                # a tour and its reverse cost the same
                perms = perms[perms[:, 0] < perms[:, -1]]
            cost = dist[depot, perms[:, 0]] + dist[perms[:, -1], depot]
            cost = cost + dist[perms[:, :-1], perms[:, 1:]].sum(axis=1)
            i = int(np.argmin(cost))
            mask = sum(1 << j for j in subset)
            best[mask] = (float(cost[i]), tuple(int(c) for c in perms[i]))
    return best


def _set_partitions(items: list[int], m: int):
    """Partitions of ``items`` (bit indices) into exactly ``m`` non-empty blocks."""
    if m == 0:
        if not items:
            yield []
        return
    if len(items) < m:
        return
    first, rest = items[0], items[1:]
    # the block holding ``first`` is chosen among the subsets of ``rest``
    for r in range(len(rest) - (m - 1) + 1):
        for combo in itertools.combinations(rest, r):
            remaining = [x for x in rest if x not in combo]
            block = (1 << first) | sum(1 << x for x in combo)
            for tail in _set_partitions(remaining, m - 1):
                yield [block] + tail


def brute_force_minmax(inst: Instance, m: int) -> tuple[Solution, float]:
    """Globally optimal MinMax solution by exhaustive enumeration (tiny instances only)."""
    customers = list(inst.customers)
    if len(customers) > BRUTE_FORCE_LIMIT:
        raise ValueError(
            f"brute force supports at most {BRUTE_FORCE_LIMIT} non-depot cities, "
            f"got {len(customers)}"
        )
    check_feasible(inst, m)
    best = _best_subset_tours(inst, customers, len(customers) - m + 1)
    best_cost = np.inf
    best_blocks: list[int] = []
    for blocks in _set_partitions(list(range(len(customers))), m):
        worst = max(best[b][0] for b in blocks)
        if worst < best_cost:
            best_cost, best_blocks = worst, blocks
    sol = Solution(best[b][1] for b in best_blocks)
    return sol, float(best_cost)


@dataclass
class SearchResult:
    """Outcome of one stochastic solver run.

    ``trace`` rows are ``(generation, evaluations, best_minmax)``, one per
    generation/iteration, with the best cost never increasing.
    """

    best: Solution
    cost: float
    trace: np.ndarray
    evaluations: int
