"""Shared fixtures: hand-checked instances and a seeded random-instance factory."""

import numpy as np
import pytest

from scheduling.model import Instance, cost_structure


@pytest.fixture
def single_instance():
    """One customer, p in [5, 10], L = 10."""
    return Instance([5.0], [10.0], [0.0], [1.0, 1.0], 1.25, 10.0, 1)


@pytest.fixture
def plateau_instance():
    """Ten identical customers, p in [15, 25], W = 30, constant costs, everybody shows."""
    return Instance([15.0] * 10, [25.0] * 10, [30.0] * 10, [1.0] * 11, 1.25, 220.0, 10)


@pytest.fixture
def nonmonotone_instance():
    """Three fixed 10-minute customers with W = (0, 0, 30) and L = 30."""
    return Instance([10.0] * 3, [10.0] * 3, [0.0, 0.0, 30.0], [1.0] * 4, 1.25, 30.0, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_instance(rng, n: int, show_count=None, cost_tag: str = "constant", max_wait: float = 20.0,
                    integral: bool = True) -> Instance:
    lb = rng.integers(2, 10, size=n).astype(float) if integral else rng.uniform(2, 10, size=n)
    width = rng.integers(0, 8, size=n).astype(float) if integral else rng.uniform(0, 8, size=n)
    ub = lb + width
    wait = rng.integers(0, int(max_wait) + 1, size=n).astype(float)
    horizon = max(float(ub.sum() - wait[-1]), 0.0)
    return Instance(
        service_lb=lb,
        service_ub=ub,
        wait_guarantee=wait,
        idle_cost=cost_structure(cost_tag, n),
        overtime_cost=1.25,
        horizon=horizon,
        show_count=n if show_count is None else show_count,
    )


@pytest.fixture
def make_instance(rng):
    """Factory: make_instance(n, show_count=None, cost_tag="constant", ...)."""
    return lambda n, **kwargs: random_instance(rng, n, **kwargs)
