"""Self-organizing ring map for the MinMax multiple-TSP.

A single ring of ``d * n`` neurons is laid on a circle around the cities and
the depot neuron is spliced into it at ``m`` evenly spaced places. The depot
neuron is a fixed point: it can win a competition but is never moved. After
training every city is attached to its closest ring neuron, and the depot
splices cut the ring into the ``m`` tours.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .routing import Solution, check_feasible
from .tsplib import Instance


@dataclass(frozen=True)
class SomConfig:
    alpha0: float = 0.6
    alpha_min: float = 0.01
    k: int = 5000
    d: int = 3
    # False lets the neighbourhood reach across a depot splice
    hard_break: bool = False
    # True draws training inputs from all n nodes, False from the customers only
    draw_depot: bool = True

    def __post_init__(self):
        if not 0 < self.alpha_min < self.alpha0 <= 1:
            raise ValueError("need 0 < alpha_min < alpha0 <= 1")
        if self.k < 1 or self.d < 1:
            raise ValueError("k and d must be >= 1")


@dataclass
class SomNetwork:
    weights: np.ndarray  # (N, 2) ring neurons, ring order
    depot_weight: np.ndarray  # (2,)
    ring_positions: np.ndarray  # (N,) slot of each ring neuron on the spliced ring
    depot_positions: np.ndarray  # (m,) slots taken by the depot splices
    iterations: int
    sigma0: float
    t: int = 0

    @property
    def n_ring(self) -> int:
        return self.weights.shape[0]

    @property
    def ring_length(self) -> int:
        """Slots on the spliced ring: ring neurons plus depot splices."""
        return self.n_ring + self.depot_positions.shape[0]

    @property
    def m(self) -> int:
        return self.depot_positions.shape[0]

    def breaks(self) -> np.ndarray:
        """Ring-neuron index that follows each depot splice."""
        return self.depot_positions - np.arange(self.m)


def depot_breaks(n_ring: int, m: int, rotation: int) -> np.ndarray:
    return np.sort((rotation + (np.arange(m) * n_ring) // m) % n_ring)


def init_ring(inst: Instance, m: int, cfg: SomConfig, rotation: int = 0) -> SomNetwork:
    check_feasible(inst, m)
    n_ring = cfg.d * inst.n
    if not 0 <= rotation < n_ring:
        raise ValueError(f"rotation must be in [0, {n_ring}), got {rotation}")
    coords = inst.coords
    center = coords.mean(axis=0)
    span = coords.max(axis=0) - coords.min(axis=0)
    r = span.min() / 2.0
    if r == 0.0:
        r = max(span.max() / 2.0, 1.0)
    theta = 2.0 * np.pi * np.arange(n_ring) / n_ring
    weights = center + r * np.column_stack((np.cos(theta), np.sin(theta)))

    breaks = depot_breaks(n_ring, m, rotation)
    # each splice sits in front of ring neuron breaks[i]
    shift = np.searchsorted(breaks, np.arange(n_ring), side="right")
    ring_positions = np.arange(n_ring) + shift
    depot_positions = breaks + np.arange(m)
    return SomNetwork(
        weights=weights,
        depot_weight=coords[inst.depot].copy(),
        ring_positions=ring_positions.astype(np.int64),
        depot_positions=depot_positions.astype(np.int64),
        iterations=cfg.k,
        sigma0=float(n_ring + 1),
    )


def radius(net: SomNetwork, t: float) -> float:
    decay = net.iterations / math.log(net.sigma0)
    return net.sigma0 * math.exp(-t / decay)


def learning_rate(cfg: SomConfig, t: float) -> float:
    decay = cfg.k / math.log(cfg.alpha0 / cfg.alpha_min)
    return cfg.alpha0 * math.exp(-t / decay)


@njit(cache=True)
def _ring_dist(a, b, length):
    d = abs(a - b)
    return min(d, length - d)


@njit(cache=True)
def _segment_of(pos, depot_positions):
    # index of the splice preceding ``pos`` (cyclically)
    m = depot_positions.shape[0]
    s = m - 1
    for i in range(m):
        if depot_positions[i] < pos:
            s = i
    return s


@njit(cache=True)
def _winner_distance(winner, pos, ring_positions, depot_positions, length):
    if winner < 0:
        best = length
        for a in range(depot_positions.shape[0]):
            d = _ring_dist(depot_positions[a], pos, length)
            if d < best:
                best = d
        return best
    return _ring_dist(ring_positions[winner], pos, length)


@njit(cache=True)
def neighborhood_factor(dist, sigma):
    scale = sigma / 10.0
    return math.exp(-(dist * dist) / (2.0 * scale * scale))


# exp(-x) is exactly 0.0 in float64 for x > ~745.13
_UNDERFLOW = math.sqrt(2.0 * 745.2)


@njit(cache=True)
def _train(weights, depot_weight, ring_positions, depot_positions, coords,
           t_start, t_stop, iterations, sigma0, alpha0, alpha_min, hard_break, rng):
    n_ring = weights.shape[0]
    length = n_ring + depot_positions.shape[0]
    n_cities = coords.shape[0]
    lam_r = iterations / math.log(sigma0)
    lam_l = iterations / math.log(alpha0 / alpha_min)
    for t in range(t_start, t_stop):
        x = coords[rng.integers(0, n_cities)]
        # competition; -1 marks the depot neuron, ring neurons win ties
        winner = 0
        best = np.inf
        for j in range(n_ring):
            dx = weights[j, 0] - x[0]
            dy = weights[j, 1] - x[1]
            dd = dx * dx + dy * dy
            if dd < best:
                best = dd
                winner = j
        dx = depot_weight[0] - x[0]
        dy = depot_weight[1] - x[1]
        if dx * dx + dy * dy < best:
            winner = -1

        sigma = sigma0 * math.exp(-t / lam_r)
        alpha = alpha0 * math.exp(-t / lam_l)
        reach = _UNDERFLOW * sigma / 10.0
        win_seg = -1
        if hard_break and winner >= 0:
            win_seg = _segment_of(ring_positions[winner], depot_positions)
        for i in range(n_ring):
            pos = ring_positions[i]
            d = _winner_distance(winner, pos, ring_positions, depot_positions, length)
            if d > reach:
                continue  # factor underflows to exactly 0
            if win_seg >= 0 and _segment_of(pos, depot_positions) != win_seg:
                continue
            h = alpha * neighborhood_factor(float(d), sigma)
            weights[i, 0] += h * (x[0] - weights[i, 0])
            weights[i, 1] += h * (x[1] - weights[i, 1])


def neighborhood(net: SomNetwork, winner: int, i: int, t: float) -> float:
    """Gaussian factor between ring neuron ``i`` and ``winner`` (-1 = depot)."""
    d = _winner_distance(winner, int(net.ring_positions[i]), net.ring_positions,
                         net.depot_positions, net.ring_length)
    return neighborhood_factor(float(d), radius(net, t))


def train(net: SomNetwork, inst: Instance, cfg: SomConfig, rng: np.random.Generator,
          until: int | None = None) -> SomNetwork:
    """Train in place from ``net.t`` up to ``until`` (default: all iterations)."""
    stop = net.iterations if until is None else min(until, net.iterations)
    if stop > net.t:
        inputs = inst.coords
        if not cfg.draw_depot:
            inputs = inst.coords[np.array(inst.customers, dtype=np.int64)]
        _train(net.weights, net.depot_weight, net.ring_positions, net.depot_positions,
               inputs, net.t, stop, net.iterations, net.sigma0,
               cfg.alpha0, cfg.alpha_min, cfg.hard_break, rng)
        net.t = stop
    return net


def _repair_empty(offset: int, sizes: list[int]) -> tuple[int, list[int]]:
    """Make every segment non-empty by moving boundary cities.

    Segment ``i`` holds ``sizes[i]`` consecutive cities of the cyclic city
    sequence, starting at ``offset + sum(sizes[:i])``. An empty segment takes
    the adjacent boundary city from the nearest segment that can spare one;
    single-city segments in between pass one city along.
    """
    m = len(sizes)
    sizes = list(sizes)
    while 0 in sizes:
        e = sizes.index(0)
        right = next(s for s in range(1, m) if sizes[(e + s) % m] >= 2)
        left = next(s for s in range(1, m) if sizes[(e - s) % m] >= 2)
        go_right = right < left or (
            right == left and sizes[(e + right) % m] > sizes[(e - left) % m]
        )
        sizes[e] += 1
        if go_right:
            sizes[(e + right) % m] -= 1
            if e + right >= m:
                offset += 1  # segment 0 lost its first city
        else:
            sizes[(e - left) % m] -= 1
            if left > e:
                offset -= 1  # segment 0 gained a city in front
    return offset, sizes


def extract_solution(net: SomNetwork, inst: Instance) -> Solution:
    """Attach each city to its closest ring neuron and cut tours at the splices."""
    cities = np.array(inst.customers, dtype=np.int64)
    pts = inst.coords[cities]
    d2 = ((pts[:, None, :] - net.weights[None, :, :]) ** 2).sum(axis=-1)
    nearest = d2.argmin(axis=1)  # first minimum = lower ring index
    gap = np.sqrt(d2[np.arange(len(cities)), nearest])

    n_ring = net.n_ring
    breaks = net.breaks()
    key = (nearest - breaks[0]) % n_ring
    order = np.lexsort((cities, gap, key))
    seq = cities[order].tolist()
    cuts = np.searchsorted(key[order], (breaks - breaks[0]) % n_ring, side="left")
    sizes = np.diff(np.append(cuts, len(seq))).tolist()
    offset, sizes = _repair_empty(0, sizes)
    total = len(seq)
    tours = []
    start = offset
    for size in sizes:
        tours.append([seq[j % total] for j in range(start, start + size)])
        start += size
    return Solution(tours)


def solve_som(inst: Instance, m: int, cfg: SomConfig, rng: np.random.Generator,
              rotation: int = 0) -> Solution:
    net = init_ring(inst, m, cfg, rotation)
    train(net, inst, cfg, rng)
    return extract_solution(net, inst)


def export_snapshots(inst: Instance, m: int, cfg: SomConfig, rng: np.random.Generator,
                     path: str | Path, every: int = 500, rotation: int = 0) -> Solution:
    """Train while writing neuron weights every ``every`` iterations to a CSV.

    Rows are ``iteration, slot, kind, x, y`` in spliced-ring order, so joining
    consecutive rows of one iteration traces the ring.
    """
    net = init_ring(inst, m, cfg, rotation)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["iteration", "slot", "kind", "x", "y"])
        while True:
            slots = [(int(p), "ring", w) for p, w in zip(net.ring_positions, net.weights)]
            slots += [(int(p), "depot", net.depot_weight) for p in net.depot_positions]
            for pos, kind, (x, y) in sorted(slots, key=lambda s: s[0]):
                out.writerow([net.t, pos, kind, repr(float(x)), repr(float(y))])
            if net.t >= net.iterations:
                break
            train(net, inst, cfg, rng, until=net.t + every)
    return extract_solution(net, inst)
