import numpy as np
import pytest

from mmtsp.aco import AcoConfig, initial_pheromone, run_acs
from mmtsp.evo import EaConfig, random_population, run_ea
from mmtsp.hybrid import (
    pheromone_from_lengths,
    rotation_offsets,
    som_pheromone_seed,
    som_seed_population,
)
from mmtsp.routing import InfeasibleError, minmax_cost, minsum_cost, validate
from mmtsp.som import SomConfig, solve_som
from mmtsp.tsplib import load_instance

FAST = SomConfig(k=2000)


def test_single_member_uses_rotation_zero():
    inst = load_instance("eil51")
    assert rotation_offsets(153, 1) == [0]
    (sol,) = som_seed_population(inst, 2, FAST, 1, np.random.default_rng(0))
    # the one child stream is rng.spawn(1)[0]
    child = np.random.default_rng(0).spawn(1)[0]
    assert sol == solve_som(inst, 2, FAST, child, rotation=0)


@pytest.mark.parametrize("ring,count", [(153, 100), (153, 153), (12, 5), (7, 3), (228, 10)])
def test_offsets_are_distinct_and_rounded(ring, count):
    offsets = rotation_offsets(ring, count)
    assert len(set(offsets)) == count
    for j, off in enumerate(offsets):
        exact = j * ring / count
        assert abs(off - exact) <= 0.5
        assert 0 <= off < ring


def test_offsets_round_halves_up():
    assert rotation_offsets(3, 2) == [0, 2]  # 1.5 rounds to 2
    with pytest.raises(ValueError):
        rotation_offsets(10, 0)


def test_seed_population_is_valid_and_varied():
    inst = load_instance("eil51")
    pop = som_seed_population(inst, 3, FAST, 8, np.random.default_rng(1))
    assert len(pop) == 8
    for sol in pop:
        assert validate(inst, sol) == [] and sol.m == 3
    assert len({minmax_cost(inst, s) for s in pop}) > 1
    with pytest.raises(InfeasibleError):
        som_seed_population(inst, 51, FAST, 2, np.random.default_rng(1))


def test_pheromone_formula():
    assert pheromone_from_lengths(10, [100, 200]) == pytest.approx(0.0015, rel=1e-15)
    assert pheromone_from_lengths(51, [500]) == 1.0 / 25500
    with pytest.raises(ValueError):
        pheromone_from_lengths(10, [])
    with pytest.raises(ValueError):
        pheromone_from_lengths(10, [100, 0])


def test_single_run_seed_has_nearest_neighbour_form():
    inst = load_instance("eil51")
    tau0 = som_pheromone_seed(inst, 2, FAST, 1, np.random.default_rng(2))
    child = np.random.default_rng(2).spawn(1)[0]
    sol = solve_som(inst, 2, FAST, child, rotation=0)
    assert tau0 == pytest.approx(1.0 / (inst.n * minsum_cost(inst, sol)), rel=1e-12)
    tau_mm = som_pheromone_seed(inst, 2, FAST, 1, np.random.default_rng(2), length="minmax")
    assert tau_mm == pytest.approx(1.0 / (inst.n * minmax_cost(inst, sol)), rel=1e-12)
    assert tau_mm > tau0


def test_seed_grows_with_run_count():
    inst = load_instance("eil51")
    values = [som_pheromone_seed(inst, 2, FAST, N, np.random.default_rng(3)) for N in (1, 2, 5)]
    assert values[0] > 0
    assert values[0] < values[1] < values[2]
    with pytest.raises(ValueError):
        som_pheromone_seed(inst, 2, FAST, 0, np.random.default_rng(3))
    with pytest.raises(ValueError):
        som_pheromone_seed(inst, 2, FAST, 1, np.random.default_rng(3), length="mean")


def test_seeded_tau0_exceeds_nearest_neighbour_level():
    # N shorter-than-random tours summed: the level is larger than one NN term
    inst = load_instance("eil51")
    tau0 = som_pheromone_seed(inst, 2, FAST, 10, np.random.default_rng(4))
    assert tau0 > initial_pheromone(inst)
    res = run_acs(inst, 2, AcoConfig(budget=200), np.random.default_rng(4), tau0_override=tau0)
    assert validate(inst, res.best) == []


def test_seeded_start_beats_random_start():
    inst = load_instance("eil51")
    seeded, random_ = [], []
    for s in range(5):
        rng = np.random.default_rng(s)
        seeded.append(min(minmax_cost(inst, p)
                          for p in som_seed_population(inst, 2, FAST, 20, rng)))
        random_.append(min(minmax_cost(inst, p) for p in random_population(inst, 2, 20, rng)))
    assert max(seeded) < min(random_)


def test_seeded_ea_trace_starts_at_seed_best():
    inst = load_instance("eil51")
    cfg = EaConfig(pop_size=20, budget=400)
    pop = som_seed_population(inst, 2, FAST, 20, np.random.default_rng(5))
    res = run_ea(inst, 2, cfg, np.random.default_rng(6), seed_population=pop)
    assert res.trace[0, 2] == min(minmax_cost(inst, p) for p in pop)
