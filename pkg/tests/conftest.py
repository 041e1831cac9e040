import math

import numpy as np
import pytest

from mmtsp.tsplib import Instance


def random_instance(rng: np.random.Generator, n: int, name: str = "rand",
                    scale: float = 100.0) -> Instance:
    return Instance(name, rng.uniform(0.0, scale, size=(n, 2)))


def naive_tour_cost(coords, depot, tour) -> float:
    """Independent re-summation with math.hypot, for checking the fast paths."""
    route = [depot, *tour, depot] if len(tour) else []
    return sum(math.hypot(coords[a][0] - coords[b][0], coords[a][1] - coords[b][1])
               for a, b in zip(route, route[1:]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def square():
    """Depot at the origin plus the other three unit-square corners."""
    return Instance("square", np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]))


# one pass/fail line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
