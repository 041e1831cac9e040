"""g-MinMaxACS: an ant colony system where m ants build one multi-tour solution.

All ants start at the depot. At every step one salesman is picked at random
and moves with the usual ACS pseudo-random-proportional rule; every crossed
edge gets the local update whichever salesman crossed it. After each batch
of constructions the global-best solution (lowest longest tour) reinforces
all of its edges, depot legs included.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .routing import SearchResult, Solution, check_feasible, pack, route_cost, unpack
from .tsplib import Instance

# keeps tau strictly positive when never-reinforced edges decay for a long time
TAU_FLOOR = np.finfo(np.float64).tiny
# heuristic for coincident cities, where 1/distance is undefined
_MIN_DIST = 1e-12


@dataclass(frozen=True)
class AcoConfig:
    q0: float = 0.9
    alpha: float = 0.1
    rho: float = 0.1
    beta: float = 2.0
    colony: int = 10
    budget: int = 250_000
    # give every salesman its first city before anyone takes a second
    force_nonempty: bool = True

    def __post_init__(self):
        for name in ("q0", "alpha", "rho"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.colony < 1 or self.budget < 1:
            raise ValueError("colony and budget must be >= 1")


@dataclass
class PheromoneMatrix:
    tau: np.ndarray
    tau0: float

    @classmethod
    def uniform(cls, n: int, tau0: float) -> "PheromoneMatrix":
        if not tau0 > 0:
            raise ValueError("tau0 must be positive")
        return cls(np.full((n, n), tau0), tau0)


def nearest_neighbor_length(inst: Instance) -> float:
    """Length of the greedy nearest-neighbour TSP tour from the depot."""
    n = inst.n
    unvisited = np.ones(n, dtype=bool)
    cur = inst.depot
    unvisited[cur] = False
    total = 0.0
    for _ in range(n - 1):
        row = np.where(unvisited, inst.dist[cur], np.inf)
        nxt = int(np.argmin(row))
        total += inst.dist[cur, nxt]
        unvisited[nxt] = False
        cur = nxt
    return total + inst.dist[cur, inst.depot]


def initial_pheromone(inst: Instance) -> float:
    return 1.0 / (inst.n * nearest_neighbor_length(inst))


def heuristic_matrix(inst: Instance, beta: float) -> np.ndarray:
    """eta(r, s) ** beta with eta = 1 / distance."""
    with np.errstate(divide="ignore"):
        eta = 1.0 / np.maximum(inst.dist, _MIN_DIST)
    return eta**beta


def pheromone_floor(eta_b: np.ndarray) -> float:
    """Smallest tau kept by the global decay.

    Raised above TAU_FLOOR where needed so that tau * eta**beta stays a
    normal float: subnormal products are numerically meaningless here and
    make the arithmetic very slow.
    """
    return TAU_FLOOR / min(1.0, float(eta_b.min()))


@njit(cache=True)
def _choose(r, cand, n_cand, attract, q0, rng):
    """Pick an index into cand[:n_cand] by the ACS transition rule.

    ``attract`` is tau * eta**beta, kept in sync with tau by the updates.
    """
    if n_cand == 1:
        return 0
    row = attract[r]
    if rng.random() <= q0:
        best = 0
        best_v = -1.0
        for i in range(n_cand):
            v = row[cand[i]]
            if v > best_v:
                best_v = v
                best = i
        return best
    total = 0.0
    for i in range(n_cand):
        total += row[cand[i]]
    target = rng.random() * total
    acc = 0.0
    for i in range(n_cand):
        acc += row[cand[i]]
        if acc > target:
            return i
    return n_cand - 1


@njit(cache=True)
def _local(tau, attract, eta_b, r, s, rho, tau0):
    v = (1.0 - rho) * tau[r, s] + rho * tau0
    tau[r, s] = v
    tau[s, r] = v
    attract[r, s] = v * eta_b[r, s]
    attract[s, r] = v * eta_b[s, r]


@njit(cache=True)
def _construct(dist, eta_b, depot, m, tau, attract, tau0, q0, rho, force_nonempty, rng,
               order, lens, tour_costs):
    """Build one solution into (order, lens); returns its MinMax cost."""
    n = dist.shape[0]
    n_cust = n - 1
    cand = np.empty(n_cust, np.int64)
    c = 0
    for i in range(n):
        if i != depot:
            cand[c] = i
            c += 1
    n_cand = n_cust
    tours = np.empty((m, n_cust), np.int64)
    tl = np.zeros(m, np.int64)
    pos = np.full(m, depot, np.int64)
    n_forced = 0
    first = np.arange(m)
    if force_nonempty:
        rng.shuffle(first)
    while n_cand > 0:
        if force_nonempty and n_forced < m:
            k = first[n_forced]
            n_forced += 1
        else:
            k = rng.integers(0, m)
        i = _choose(pos[k], cand, n_cand, attract, q0, rng)
        s = cand[i]
        cand[i] = cand[n_cand - 1]
        cand[n_cand - 1] = s
        n_cand -= 1
        _local(tau, attract, eta_b, pos[k], s, rho, tau0)
        tours[k, tl[k]] = s
        tl[k] += 1
        pos[k] = s
    for k in range(m):
        if tl[k] > 0:
            _local(tau, attract, eta_b, pos[k], depot, rho, tau0)

    if not force_nonempty:
        # hand an empty salesman the last city of the tour with most cities
        for k in range(m):
            if tl[k] == 0:
                donor = np.argmax(tl)
                tl[donor] -= 1
                tours[k, 0] = tours[donor, tl[donor]]
                tl[k] = 1

    w = 0
    worst = 0.0
    for k in range(m):
        lens[k] = tl[k]
        for j in range(tl[k]):
            order[w] = tours[k, j]
            w += 1
        cost = route_cost(dist, depot, tours[k, : tl[k]])
        tour_costs[k] = cost
        if cost > worst:
            worst = cost
    return worst


@njit(cache=True)
def _global(tau, attract, eta_b, depot, order, lens, alpha, best_cost, floor):
    n = tau.shape[0]
    keep = 1.0 - alpha
    for r in range(n):
        for s in range(n):
            v = keep * tau[r, s]
            tau[r, s] = v if v > floor else floor
    deposit = alpha / best_cost
    start = 0
    for k in range(lens.shape[0]):
        prev = depot
        # a one-city tour uses the same edge out and back: reward it once
        stop = start + lens[k] + (1 if lens[k] > 1 else 0)
        for j in range(start, stop):
            nxt = order[j] if j < start + lens[k] else depot
            tau[prev, nxt] += deposit
            tau[nxt, prev] += deposit
            prev = nxt
        start += lens[k]
    for r in range(n):
        for s in range(n):
            attract[r, s] = tau[r, s] * eta_b[r, s]


@njit(cache=True)
def _run(dist, eta_b, depot, m, tau, tau0, q0, alpha, rho, colony, budget,
         force_nonempty, floor, rng):
    attract = tau * eta_b
    n_cust = dist.shape[0] - 1
    order = np.empty(n_cust, np.int64)
    lens = np.empty(m, np.int64)
    tcosts = np.empty(m)
    best_order = np.empty(n_cust, np.int64)
    best_lens = np.empty(m, np.int64)
    best_cost = np.inf
    n_iter = (budget + colony - 1) // colony
    trace = np.empty((n_iter, 3))
    evals = 0
    it = 0
    while evals < budget:
        for _ in range(colony):
            if evals >= budget:
                break
            cost = _construct(dist, eta_b, depot, m, tau, attract, tau0, q0, rho,
                              force_nonempty, rng, order, lens, tcosts)
            evals += 1
            if cost < best_cost:
                best_cost = cost
                best_order[:] = order
                best_lens[:] = lens
        _global(tau, attract, eta_b, depot, best_order, best_lens, alpha, best_cost, floor)
        trace[it, 0] = it + 1
        trace[it, 1] = evals
        trace[it, 2] = best_cost
        it += 1
    return best_order, best_lens, best_cost, trace[:it].copy(), evals


def run_acs(inst: Instance, m: int, cfg: AcoConfig, rng: np.random.Generator,
            tau0_override: float | None = None) -> SearchResult:
    check_feasible(inst, m)
    tau0 = initial_pheromone(inst) if tau0_override is None else float(tau0_override)
    pher = PheromoneMatrix.uniform(inst.n, tau0)
    eta_b = heuristic_matrix(inst, cfg.beta)
    best_order, best_lens, best_cost, trace, evals = _run(
        inst.dist, eta_b, inst.depot, m, pher.tau, tau0, cfg.q0, cfg.alpha, cfg.rho,
        cfg.colony, cfg.budget, cfg.force_nonempty, pheromone_floor(eta_b), rng,
    )
    return SearchResult(unpack(best_order, best_lens), float(best_cost), trace, int(evals))


# ---------------------------------------------------------------------------
# single-step API

def choose_next_city(inst: Instance, r: int, candidates: Sequence[int], pher: PheromoneMatrix,
                     cfg: AcoConfig, rng: np.random.Generator) -> int:
    cand = np.array(candidates, dtype=np.int64)
    if cand.size == 0:
        raise ValueError("no candidate cities")
    attract = pher.tau * heuristic_matrix(inst, cfg.beta)
    i = _choose(r, cand, cand.size, attract, cfg.q0, rng)
    return int(cand[i])


def local_update(pher: PheromoneMatrix, r: int, s: int, cfg: AcoConfig) -> PheromoneMatrix:
    if r == s:
        raise ValueError("local update needs two distinct cities")
    eta_b = np.ones_like(pher.tau)
    _local(pher.tau, eta_b, eta_b, r, s, cfg.rho, pher.tau0)
    return pher


def global_update(inst: Instance, pher: PheromoneMatrix, best: Solution, best_cost: float,
                  cfg: AcoConfig) -> PheromoneMatrix:
    """Decay every edge and reinforce the best solution's edges by alpha / best_cost."""
    order, lens = pack(best)
    scratch = np.empty_like(pher.tau)
    _global(pher.tau, scratch, np.ones_like(pher.tau), inst.depot, order, lens, cfg.alpha,
            best_cost, TAU_FLOOR)
    return pher


def construct_solution(inst: Instance, m: int, pher: PheromoneMatrix, cfg: AcoConfig,
                       rng: np.random.Generator) -> Solution:
    check_feasible(inst, m)
    order = np.empty(inst.n - 1, np.int64)
    lens = np.empty(m, np.int64)
    eta_b = heuristic_matrix(inst, cfg.beta)
    _construct(inst.dist, eta_b, inst.depot, m, pher.tau, pher.tau * eta_b, pher.tau0,
               cfg.q0, cfg.rho, cfg.force_nonempty, rng, order, lens, np.empty(m))
    return unpack(order, lens)
