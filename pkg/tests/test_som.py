import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_instance
from mmtsp.routing import InfeasibleError, Solution, minmax_cost, validate
from mmtsp.som import (
    SomConfig,
    _repair_empty,
    export_snapshots,
    extract_solution,
    init_ring,
    learning_rate,
    neighborhood,
    neighborhood_factor,
    radius,
    solve_som,
    train,
)
from mmtsp.tsplib import Instance, load_instance

CFG = SomConfig()


def test_config_validation():
    with pytest.raises(ValueError):
        SomConfig(alpha0=0.01, alpha_min=0.6)
    with pytest.raises(ValueError):
        SomConfig(k=0)
    with pytest.raises(ValueError):
        SomConfig(d=0)


def test_eil76_five_salesmen_ring():
    inst = load_instance("eil76")
    net = init_ring(inst, 5, CFG)
    assert net.n_ring == 228
    assert net.m == 5
    assert net.ring_length == 233
    assert net.sigma0 == 229
    pos = net.depot_positions
    assert np.all(np.diff(pos) > 0) and pos[-1] < net.ring_length
    # ring slots and depot slots tile the spliced ring exactly once
    slots = np.concatenate((net.ring_positions, pos))
    assert sorted(slots.tolist()) == list(range(net.ring_length))
    assert np.array_equal(net.depot_weight, inst.coords[0])


def test_minimal_ring():
    inst = Instance("two", np.array([[0.0, 0.0], [1.0, 0.0]]))
    net = init_ring(inst, 1, SomConfig(d=1))
    assert net.n_ring == 2 and net.m == 1 and net.ring_length == 3


def test_rotation_shifts_only_depot_positions():
    inst = load_instance("eil51")
    a = init_ring(inst, 3, CFG, rotation=0)
    b = init_ring(inst, 3, CFG, rotation=7)
    assert np.array_equal(a.weights, b.weights)
    assert np.array_equal(b.breaks(), (a.breaks() + 7) % a.n_ring)
    with pytest.raises(ValueError):
        init_ring(inst, 3, CFG, rotation=a.n_ring)


def test_ring_geometry():
    inst = load_instance("eil51")
    net = init_ring(inst, 2, CFG)
    centre = inst.coords.mean(axis=0)
    r = (inst.coords.max(axis=0) - inst.coords.min(axis=0)).min() / 2
    assert np.allclose(np.linalg.norm(net.weights - centre, axis=1), r)


def test_infeasible_m():
    inst = Instance("three", np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]))
    with pytest.raises(InfeasibleError):
        init_ring(inst, 3, CFG)


def test_radius_schedule():
    inst = load_instance("eil51")
    net = init_ring(inst, 2, CFG)
    assert net.sigma0 == 154
    assert radius(net, 0) == 154
    assert radius(net, CFG.k) == pytest.approx(1.0, abs=1e-12)
    assert radius(net, CFG.k / 2) == pytest.approx(math.sqrt(154), rel=1e-12)
    assert radius(net, CFG.k / 2) == pytest.approx(12.41, abs=0.005)
    ts = np.arange(0, CFG.k + 1, 250)
    assert np.all(np.diff([radius(net, t) for t in ts]) < 0)


def test_learning_rate_schedule():
    assert learning_rate(CFG, 0) == 0.6
    assert learning_rate(CFG, CFG.k) == pytest.approx(0.01, abs=1e-12)
    assert learning_rate(CFG, CFG.k / 2) == pytest.approx(math.sqrt(0.6 * 0.01), rel=1e-12)
    assert learning_rate(CFG, CFG.k / 2) == pytest.approx(0.07746, abs=5e-6)
    ts = np.arange(0, CFG.k + 1, 250)
    assert np.all(np.diff([learning_rate(CFG, t) for t in ts]) < 0)


def test_neighborhood_values():
    sigma = 37.0
    assert neighborhood_factor(0.0, sigma) == 1.0
    assert neighborhood_factor(sigma / 10, sigma) == pytest.approx(math.exp(-0.5), rel=1e-14)
    assert neighborhood_factor(3 * sigma / 10, sigma) == pytest.approx(math.exp(-4.5),
                                                                       rel=1e-14)
    assert neighborhood_factor(3 * sigma / 10, sigma) == pytest.approx(0.0111, abs=5e-5)


def test_neighborhood_uses_ring_hops():
    inst = load_instance("eil51")
    net = init_ring(inst, 2, CFG)
    assert neighborhood(net, 5, 5, 0) == 1.0
    t = 1000
    sigma = radius(net, t)
    expected = math.exp(-(3 ** 2) / (2 * (sigma / 10) ** 2))
    # neurons 10 and 13 sit three slots apart (no splice between them at rotation 0)
    assert neighborhood(net, 10, 13, t) == pytest.approx(expected, rel=1e-14)
    # wrap-around: first and last ring neuron are two slots apart (one splice between)
    first, last = 0, net.n_ring - 1
    d = min(abs(int(net.ring_positions[first] - net.ring_positions[last])),
            net.ring_length - abs(int(net.ring_positions[first] - net.ring_positions[last])))
    assert d == 2
    # the depot winner uses its nearest alias
    alias = net.depot_positions[1]
    neighbour = int(np.searchsorted(net.ring_positions, alias))  # the slot after the splice
    assert neighborhood(net, -1, neighbour, t) == pytest.approx(
        math.exp(-1 / (2 * (sigma / 10) ** 2)), rel=1e-14)


def test_zero_iterations_leave_network_unchanged(rng):
    inst = load_instance("eil51")
    net = init_ring(inst, 2, CFG)
    before = net.weights.copy()
    train(net, inst, CFG, rng, until=0)
    assert np.array_equal(net.weights, before) and net.t == 0


def test_depot_never_moves_and_training_completes(rng):
    inst = load_instance("eil76")
    net = init_ring(inst, 5, CFG)
    depot = net.depot_weight.copy()
    for stop in (1000, 2500, CFG.k):
        train(net, inst, CFG, rng, until=stop)
        assert np.array_equal(net.depot_weight, depot)
    assert net.t == CFG.k
    sol = extract_solution(net, inst)
    assert validate(inst, sol) == [] and sol.m == 5
    # after training every city has a neuron close to it
    gaps = np.linalg.norm(inst.coords[1:, None, :] - net.weights[None], axis=-1).min(axis=1)
    assert gaps.max() < 5.0


def test_winner_on_the_drawn_city_does_not_move():
    # depot and customer share one point, so every draw is that point
    inst = Instance("pin", np.array([[2.0, 3.0], [2.0, 3.0]]))
    cfg = SomConfig(k=20, d=3)
    net = init_ring(inst, 1, cfg)
    net.weights[:] = [[2.0, 3.0], [5.0, 3.0], [2.0, 9.0], [-4.0, 3.0], [2.0, -3.0], [8.0, 8.0]]
    before = net.weights.copy()
    train(net, inst, cfg, np.random.default_rng(3))
    assert np.array_equal(net.weights[0], before[0])
    # the others were pulled toward the point
    dist_before = np.linalg.norm(before[1:] - [2.0, 3.0], axis=1)
    dist_after = np.linalg.norm(net.weights[1:] - [2.0, 3.0], axis=1)
    assert np.all(dist_after < dist_before)


def test_chunked_training_matches_single_pass():
    inst = load_instance("eil51")
    a = init_ring(inst, 3, CFG)
    b = init_ring(inst, 3, CFG)
    train(a, inst, CFG, np.random.default_rng(7))
    rng = np.random.default_rng(7)
    for stop in range(500, CFG.k + 1, 500):
        train(b, inst, CFG, rng, until=stop)
    assert np.array_equal(a.weights, b.weights)


def test_determinism():
    inst = load_instance("eil51")
    a = solve_som(inst, 3, CFG, np.random.default_rng(11), rotation=5)
    b = solve_som(inst, 3, CFG, np.random.default_rng(11), rotation=5)
    assert a == b


def test_cities_on_neurons_follow_ring_order():
    # ring neurons placed exactly on the cities in a known order
    inst = Instance("ring", np.array([[0, 0], [1, 0], [2, 0], [3, 0], [4, 0]], dtype=float))
    net = init_ring(inst, 2, SomConfig(d=1), rotation=0)
    order = [3, 1, 4, 2, 0]
    net.weights[:] = inst.coords[order]
    net.weights[4] = [10.0, 10.0]  # keep the depot's own neuron out of the way
    sol = extract_solution(net, inst)
    breaks = net.breaks()
    ring = [c for c in order if c != 0]
    # cut the ring order at the splice in front of breaks[1]
    split = sum(1 for j, c in enumerate(order) if c != 0 and j < breaks[1])
    assert sol == Solution([ring[:split], ring[split:]])


def test_all_cities_in_one_segment_get_repaired():
    inst = Instance("clump", np.array([[0, 0], [1, 0], [1.1, 0], [1.2, 0]], dtype=float))
    net = init_ring(inst, 2, SomConfig(d=3), rotation=0)
    net.weights[:] = [50.0, 50.0]
    net.weights[1:4] = inst.coords[1:4]
    sol = extract_solution(net, inst)
    assert validate(inst, sol) == []
    assert sorted(len(t) for t in sol.tours) == [1, 2]


@pytest.mark.parametrize("sizes,expected", [
    ([3, 0], [2, 1]),
    ([0, 3], [1, 2]),
    ([2, 0, 1], [1, 1, 1]),
    ([4, 0, 0, 1], [2, 1, 1, 1]),
    ([1, 1, 0, 5], [1, 1, 1, 4]),
    ([0, 0, 0, 4], [1, 1, 1, 1]),
])
def test_repair_sizes(sizes, expected):
    offset, out = _repair_empty(0, sizes)
    assert out == expected
    assert sum(out) == sum(sizes)


def test_repair_moves_boundary_cities_only():
    # segment 1 is empty and takes the last city of segment 0
    offset, sizes = _repair_empty(0, [3, 0, 2])
    assert (offset, sizes) == (0, [2, 1, 2])
    # segment 0 is empty and takes the first city of segment 1
    offset, sizes = _repair_empty(0, [0, 3, 1])
    assert (offset, sizes) == (0, [1, 2, 1])
    # taking from the segment before 0 (cyclically) shifts the start back
    offset, sizes = _repair_empty(0, [0, 1, 3])
    assert (offset, sizes) == (-1, [1, 1, 2])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 12), st.integers(1, 6), st.integers(0, 300))
def test_extraction_always_valid(seed, n, m, iters):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n)
    m = min(m, n - 1)
    cfg = SomConfig(k=max(iters, 1))
    net = init_ring(inst, m, cfg, rotation=int(rng.integers(0, cfg.d * n)))
    train(net, inst, cfg, rng, until=iters)
    sol = extract_solution(net, inst)
    assert validate(inst, sol) == [] and sol.m == m


def test_snapshot_export(tmp_path):
    inst = load_instance("eil51")
    path = tmp_path / "snap.csv"
    sol = export_snapshots(inst, 2, SomConfig(k=1000), np.random.default_rng(1), path,
                           every=500)
    rows = list(csv.DictReader(open(path)))
    iters = sorted({int(r["iteration"]) for r in rows})
    assert iters == [0, 500, 1000]
    per_iter = [r for r in rows if r["iteration"] == "0"]
    assert len(per_iter) == 3 * 51 + 2
    assert sum(r["kind"] == "depot" for r in per_iter) == 2
    assert validate(inst, sol) == []


def test_quality_on_eil51():
    inst = load_instance("eil51")
    costs = []
    for s in range(20):
        rng = np.random.default_rng(s)
        sol = solve_som(inst, 2, CFG, rng, rotation=int(rng.integers(0, 153)))
        costs.append(minmax_cost(inst, sol))
    # a trained ring gives tours far better than random ones (random tours cost ~800+)
    assert np.mean(costs) < 300


def test_depot_draws_can_be_switched_off():
    pts = [[1000.0, 1000.0], [0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]]
    inst = Instance("far", np.array(pts))
    # customers only: a far-away depot never wins, so the ring stays on the customers
    cfg = SomConfig(draw_depot=False)
    net = init_ring(inst, 2, cfg)
    train(net, inst, cfg, np.random.default_rng(4))
    assert np.all(np.linalg.norm(net.weights - [5.0, 5.0], axis=1) < 20.0)
    # default: the depot is drawn too and pulls the neurons next to its splices
    net = init_ring(inst, 2, CFG)
    train(net, inst, CFG, np.random.default_rng(4))
    assert np.linalg.norm(net.weights - [5.0, 5.0], axis=1).max() > 500.0
