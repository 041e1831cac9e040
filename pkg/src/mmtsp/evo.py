"""Multi-chromosome evolution strategy for the MinMax multiple-TSP.

Individuals hold one chromosome (tour) per salesman. There is no crossover:
offspring come from cross-tour segment swaps inside one individual and three
in-tour mutations. Survival is fitness-proportional with a global elite
archive, and 2-opt can be run periodically on every tour.

Genomes are kept packed for the compiled loop: ``order`` concatenates the
tours and ``lens`` holds their lengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .local_search import two_opt_inplace
from .routing import (
    SearchResult,
    Solution,
    Tour,
    check_feasible,
    pack,
    packed_costs,
    unpack,
    validate,
)
from .tsplib import Instance


@dataclass(frozen=True)
class EaConfig:
    pop_size: int = 100
    p_x: float = 0.4
    p_sort: float = 0.1
    p_m: float = 0.1
    e: float = 0.25
    f_2opt: int = 0
    budget: int = 250_000
    max_generations: int | None = None
    # True: every individual costs one evaluation per generation, as if the
    # whole population were re-scored. False: only genomes that changed count.
    count_unchanged: bool = True

    def __post_init__(self):
        for name in ("p_x", "p_sort", "p_m", "e"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.pop_size < 2:
            raise ValueError("pop_size must be >= 2")
        if self.budget < self.pop_size:
            raise ValueError("budget must cover at least the initial population")
        if self.f_2opt < 0:
            raise ValueError("f_2opt must be >= 0")
        if (self.p_x == 0 and self.p_m == 0 and self.max_generations is None
                and not self.count_unchanged):
            raise ValueError("with no mutation the budget is never spent; set max_generations")

    @property
    def n_elite(self) -> int:
        return math.ceil(self.e * self.pop_size)


def mutation_probabilities(cfg: EaConfig) -> tuple[float, float, float]:
    """Split the in-tour rate evenly over inversion, insertion and transposition."""
    p = cfg.p_m / 3.0
    return p, p, p


@dataclass(frozen=True)
class Individual:
    genome: Solution
    fitness: float
    tour_costs: tuple[float, ...]

    @classmethod
    def evaluate(cls, inst: Instance, genome: Solution) -> "Individual":
        order, lens = pack(genome)
        costs = np.empty(len(lens))
        worst = packed_costs(inst.dist, inst.depot, order, lens, costs)
        return cls(genome, float(worst), tuple(costs.tolist()))


# ---------------------------------------------------------------------------
# elementary moves

@njit(cache=True)
def reverse_segment(seq, i, j):
    """Reverse seq[i..j] in place (inclusive)."""
    if i > j:
        i, j = j, i
    while i < j:
        tmp = seq[i]
        seq[i] = seq[j]
        seq[j] = tmp
        i += 1
        j -= 1


@njit(cache=True)
def move_city(seq, src, dst):
    """Remove seq[src] and reinsert it so that it ends up at index ``dst``."""
    city = seq[src]
    if src < dst:
        for i in range(src, dst):
            seq[i] = seq[i + 1]
    else:
        for i in range(src, dst, -1):
            seq[i] = seq[i - 1]
    seq[dst] = city


@njit(cache=True)
def swap_cities(seq, i, j):
    tmp = seq[i]
    seq[i] = seq[j]
    seq[j] = tmp


@njit(cache=True)
def _exchange_segments(order, lens, a, ia, ja, b, ib, jb, buf):
    """Swap tour a's segment [ia..ja] with tour b's [ib..jb] (packed genome)."""
    m = lens.shape[0]
    starts = np.empty(m, np.int64)
    s = 0
    for t in range(m):
        starts[t] = s
        s += lens[t]
    sa = starts[a]
    sb = starts[b]
    w = 0
    for t in range(m):
        st = starts[t]
        if t == a:
            for i in range(ia):
                buf[w] = order[sa + i]; w += 1
            for i in range(ib, jb + 1):
                buf[w] = order[sb + i]; w += 1
            for i in range(ja + 1, lens[a]):
                buf[w] = order[sa + i]; w += 1
        elif t == b:
            for i in range(ib):
                buf[w] = order[sb + i]; w += 1
            for i in range(ia, ja + 1):
                buf[w] = order[sa + i]; w += 1
            for i in range(jb + 1, lens[b]):
                buf[w] = order[sb + i]; w += 1
        else:
            for i in range(lens[t]):
                buf[w] = order[st + i]; w += 1
    order[:] = buf[: order.shape[0]]
    la = lens[a] - (ja - ia + 1) + (jb - ib + 1)
    lb = lens[b] - (jb - ib + 1) + (ja - ia + 1)
    lens[a] = la
    lens[b] = lb


@njit(cache=True)
def _cross_tour(order, lens, tour_costs, p_x, p_sort, rng, buf):
    m = lens.shape[0]
    chosen = np.empty(m, np.int64)
    c = 0
    for t in range(m):
        if rng.random() < p_x:
            chosen[c] = t
            c += 1
    if c < 2:
        return False
    chosen = chosen[:c]
    if rng.random() < p_sort:
        # longest with shortest, second longest with second shortest, ...
        keys = np.empty(c)
        for i in range(c):
            keys[i] = -tour_costs[chosen[i]]
        chosen = chosen[np.argsort(keys, kind="mergesort")]
        pairs = np.empty((c // 2, 2), np.int64)
        for i in range(c // 2):
            pairs[i, 0] = chosen[i]
            pairs[i, 1] = chosen[c - 1 - i]
    else:
        rng.shuffle(chosen)
        pairs = np.empty((c // 2, 2), np.int64)
        for i in range(c // 2):
            pairs[i, 0] = chosen[2 * i]
            pairs[i, 1] = chosen[2 * i + 1]
    for p in range(pairs.shape[0]):
        a = pairs[p, 0]
        b = pairs[p, 1]
        ia = rng.integers(0, lens[a])
        ja = rng.integers(0, lens[a])
        if ia > ja:
            ia, ja = ja, ia
        ib = rng.integers(0, lens[b])
        jb = rng.integers(0, lens[b])
        if ib > jb:
            ib, jb = jb, ib
        # both segments are non-empty, so neither tour can end up empty
        _exchange_segments(order, lens, a, ia, ja, b, ib, jb, buf)
    return True


@njit(cache=True)
def _next_trigger(pos, q, rng):
    """First index >= pos where a per-position event of probability q fires."""
    if q <= 0.0:
        return np.iinfo(np.int64).max
    if q >= 1.0:
        return pos
    u = rng.random()
    return pos + np.int64(math.floor(math.log(1.0 - u) / math.log(1.0 - q)))


@njit(cache=True)
def _inversion(seq, p_si, rng):
    k = seq.shape[0]
    changed = False
    pos = _next_trigger(0, p_si / k, rng)
    while pos < k:
        other = rng.integers(0, k)
        if other != pos:
            reverse_segment(seq, min(pos, other), max(pos, other))
            changed = True
        pos = _next_trigger(pos + 1, p_si / k, rng)
    return changed


@njit(cache=True)
def _insertion(seq, p_in, rng):
    k = seq.shape[0]
    changed = False
    pos = _next_trigger(0, p_in / k, rng)
    while pos < k:
        dst = rng.integers(0, k)
        if dst != pos:
            move_city(seq, pos, dst)
            changed = True
        pos = _next_trigger(pos + 1, p_in / k, rng)
    return changed


@njit(cache=True)
def _transposition(seq, p_tr, rng):
    k = seq.shape[0]
    changed = False
    pos = _next_trigger(0, p_tr / k, rng)
    while pos < k:
        other = rng.integers(0, k)
        if other != pos:
            swap_cities(seq, pos, other)
            changed = True
        pos = _next_trigger(pos + 1, p_tr / k, rng)
    return changed


@njit(cache=True)
def _mutate(order, lens, tour_costs, p_x, p_sort, p_si, p_in, p_tr, rng, buf):
    changed = False
    if lens.shape[0] >= 2:
        changed = _cross_tour(order, lens, tour_costs, p_x, p_sort, rng, buf)
    start = 0
    for t in range(lens.shape[0]):
        seq = order[start : start + lens[t]]
        if _inversion(seq, p_si, rng):
            changed = True
        if _insertion(seq, p_in, rng):
            changed = True
        if _transposition(seq, p_tr, rng):
            changed = True
        start += lens[t]
    return changed


# ---------------------------------------------------------------------------
# selection

@njit(cache=True)
def _roulette(costs, n, rng):
    """Draw ``n`` indices with replacement, weight 1/cost."""
    cum = np.cumsum(1.0 / costs)
    total = cum[-1]
    out = np.empty(n, np.int64)
    for i in range(n):
        j = np.searchsorted(cum, rng.random() * total, side="right")
        out[i] = min(j, costs.shape[0] - 1)
    return out


@njit(cache=True)
def _archive_offer(arch_order, arch_lens, arch_cost, size, order, lens, cost):
    """Insert a genome into the elite archive if it qualifies; returns new size."""
    cap = arch_cost.shape[0]
    if cap == 0:
        return size
    worst = 0
    if size == cap:
        for i in range(1, size):
            if arch_cost[i] > arch_cost[worst]:
                worst = i
        if cost >= arch_cost[worst]:
            return size
    for i in range(size):
        if arch_cost[i] == cost:
            same = True
            for t in range(lens.shape[0]):
                if arch_lens[i, t] != lens[t]:
                    same = False
                    break
            if same:
                for x in range(order.shape[0]):
                    if arch_order[i, x] != order[x]:
                        same = False
                        break
            if same:
                return size
    slot = size if size < cap else worst
    arch_order[slot] = order
    arch_lens[slot] = lens
    arch_cost[slot] = cost
    return size + 1 if size < cap else size


@njit(cache=True)
def _select(orders, lens, tcosts, costs, arch_order, arch_lens, arch_cost, arch_size,
            rng, new_orders, new_lens, new_tcosts, new_costs, dist, depot):
    pop = costs.shape[0]
    picks = _roulette(costs, pop, rng)
    for q in range(pop):
        p = picks[q]
        new_orders[q] = orders[p]
        new_lens[q] = lens[p]
        new_tcosts[q] = tcosts[p]
        new_costs[q] = costs[p]
    if arch_size > 0:
        # the archive replaces the worst draws
        worst_first = np.argsort(-new_costs, kind="mergesort")
        for e in range(arch_size):
            q = worst_first[e]
            new_orders[q] = arch_order[e]
            new_lens[q] = arch_lens[e]
            new_costs[q] = packed_costs(dist, depot, new_orders[q], new_lens[q], new_tcosts[q])


@njit(cache=True)
def _evolve(dist, depot, orders, lens, p_x, p_sort, p_si, p_in, p_tr, n_elite, f_2opt,
            budget, max_gens, count_unchanged, rng):
    pop, n_cust = orders.shape
    m = lens.shape[1]
    tcosts = np.empty((pop, m))
    costs = np.empty(pop)
    new_orders = np.empty_like(orders)
    new_lens = np.empty_like(lens)
    new_tcosts = np.empty_like(tcosts)
    new_costs = np.empty_like(costs)
    buf = np.empty(n_cust, np.int64)
    arch_order = np.empty((n_elite, n_cust), np.int64)
    arch_lens = np.empty((n_elite, m), np.int64)
    arch_cost = np.empty(n_elite)
    arch_size = 0
    best_order = orders[0].copy()
    best_lens = lens[0].copy()
    best_cost = np.inf

    evals = 0
    for p in range(pop):
        costs[p] = packed_costs(dist, depot, orders[p], lens[p], tcosts[p])
        evals += 1
        arch_size = _archive_offer(arch_order, arch_lens, arch_cost, arch_size,
                                   orders[p], lens[p], costs[p])
        if costs[p] < best_cost:
            best_cost = costs[p]
            best_order[:] = orders[p]
            best_lens[:] = lens[p]

    cap = 1024
    trace = np.empty((cap, 3))
    rows = 0
    trace[0, 0] = 0
    trace[0, 1] = evals
    trace[0, 2] = best_cost
    rows = 1
    gen = 0
    while evals < budget and (max_gens < 0 or gen < max_gens):
        gen += 1
        for p in range(pop):
            if evals >= budget:
                break
            if _mutate(orders[p], lens[p], tcosts[p], p_x, p_sort, p_si, p_in, p_tr, rng, buf):
                costs[p] = packed_costs(dist, depot, orders[p], lens[p], tcosts[p])
                evals += 1
                arch_size = _archive_offer(arch_order, arch_lens, arch_cost, arch_size,
                                           orders[p], lens[p], costs[p])
                if costs[p] < best_cost:
                    best_cost = costs[p]
                    best_order[:] = orders[p]
                    best_lens[:] = lens[p]
            elif count_unchanged:
                evals += 1

        _select(orders, lens, tcosts, costs, arch_order, arch_lens, arch_cost, arch_size,
                rng, new_orders, new_lens, new_tcosts, new_costs, dist, depot)
        orders, new_orders = new_orders, orders
        lens, new_lens = new_lens, lens
        tcosts, new_tcosts = new_tcosts, tcosts
        costs, new_costs = new_costs, costs

        if f_2opt > 0 and gen % f_2opt == 0:
            # 2-opt cost checks are free: not counted against the budget
            for p in range(pop):
                start = 0
                for t in range(m):
                    two_opt_inplace(dist, depot, orders[p, start : start + lens[p, t]], 1e-10)
                    start += lens[p, t]
                costs[p] = packed_costs(dist, depot, orders[p], lens[p], tcosts[p])
                arch_size = _archive_offer(arch_order, arch_lens, arch_cost, arch_size,
                                           orders[p], lens[p], costs[p])
                if costs[p] < best_cost:
                    best_cost = costs[p]
                    best_order[:] = orders[p]
                    best_lens[:] = lens[p]

        if rows == cap:
            grown = np.empty((cap * 2, 3))
            grown[:cap] = trace
            trace = grown
            cap *= 2
        trace[rows, 0] = gen
        trace[rows, 1] = evals
        trace[rows, 2] = best_cost
        rows += 1
    return best_order, best_lens, best_cost, trace[:rows].copy(), evals


def random_population(inst: Instance, m: int, size: int, rng: np.random.Generator) -> list[Solution]:
    """Shuffle the customers and deal them round-robin to the salesmen."""
    customers = np.array(inst.customers, dtype=np.int64)
    out = []
    for _ in range(size):
        perm = rng.permutation(customers)
        out.append(Solution(perm[t::m].tolist() for t in range(m)))
    return out


def run_ea(inst: Instance, m: int, cfg: EaConfig, rng: np.random.Generator,
           seed_population: Sequence[Solution] | None = None) -> SearchResult:
    check_feasible(inst, m)
    if seed_population is None:
        population = random_population(inst, m, cfg.pop_size, rng)
    else:
        population = list(seed_population)
        if len(population) != cfg.pop_size:
            raise ValueError(f"seed population has {len(population)} members, "
                             f"expected {cfg.pop_size}")
        for sol in population:
            problems = validate(inst, sol)
            if problems or sol.m != m:
                raise ValueError(f"invalid seed solution: {problems or f'm={sol.m}'}")
    packed = [pack(s) for s in population]
    orders = np.stack([o for o, _ in packed])
    lens = np.stack([ln for _, ln in packed])
    p_si, p_in, p_tr = mutation_probabilities(cfg)
    max_gens = -1 if cfg.max_generations is None else cfg.max_generations
    best_order, best_lens, best_cost, trace, evals = _evolve(
        inst.dist, inst.depot, orders, lens, cfg.p_x, cfg.p_sort, p_si, p_in, p_tr,
        cfg.n_elite, cfg.f_2opt, cfg.budget, max_gens, cfg.count_unchanged, rng,
    )
    return SearchResult(unpack(best_order, best_lens), float(best_cost), trace, int(evals))


# ---------------------------------------------------------------------------
# Python-level operators (thin wrappers over the compiled moves)

def swap_segments(a: Sequence[int], seg_a: tuple[int, int],
                  b: Sequence[int], seg_b: tuple[int, int]) -> tuple[Tour, Tour]:
    """Exchange a[i..j] with b[k..l] (inclusive bounds)."""
    order, lens = pack(Solution([a, b]))
    buf = np.empty_like(order)
    _exchange_segments(order, lens, 0, seg_a[0], seg_a[1], 1, seg_b[0], seg_b[1], buf)
    out = unpack(order, lens)
    return out.tours[0], out.tours[1]


def cross_tour_transposition(inst: Instance, ind: Individual, cfg: EaConfig,
                             rng: np.random.Generator) -> Individual:
    order, lens = pack(ind.genome)
    costs = np.asarray(ind.tour_costs, dtype=np.float64)
    if lens.shape[0] >= 2:
        _cross_tour(order, lens, costs, cfg.p_x, cfg.p_sort, rng, np.empty_like(order))
    return Individual.evaluate(inst, unpack(order, lens))


def _apply(kernel, tour: Sequence[int], p: float, rng: np.random.Generator) -> Tour:
    seq = np.array(tour, dtype=np.int64)
    if seq.size:
        kernel(seq, p, rng)
    return tuple(int(c) for c in seq)


def in_tour_inversion(tour: Sequence[int], p_si: float, rng: np.random.Generator) -> Tour:
    return _apply(_inversion, tour, p_si, rng)


def in_tour_insertion(tour: Sequence[int], p_in: float, rng: np.random.Generator) -> Tour:
    return _apply(_insertion, tour, p_in, rng)


def in_tour_transposition(tour: Sequence[int], p_tr: float, rng: np.random.Generator) -> Tour:
    return _apply(_transposition, tour, p_tr, rng)


def select_next_generation(inst: Instance, population: Sequence[Individual],
                           archive: Sequence[Individual], cfg: EaConfig,
                           rng: np.random.Generator) -> list[Individual]:
    """Roulette draw of ``len(population)`` survivors, then the archive
    (at most ``cfg.n_elite`` historically best individuals) overwrites the
    worst draws."""
    costs = np.array([ind.fitness for ind in population])
    picks = _roulette(costs, len(population), rng)
    chosen = [population[i] for i in picks]
    elites = sorted(archive, key=lambda ind: ind.fitness)[: cfg.n_elite]
    worst_first = np.argsort(-np.array([c.fitness for c in chosen]), kind="mergesort")
    for slot, elite in zip(worst_first, elites):
        chosen[slot] = elite
    return chosen


def selection_weights(costs: Sequence[float]) -> np.ndarray:
    w = 1.0 / np.asarray(costs, dtype=np.float64)
    return w / w.sum()
