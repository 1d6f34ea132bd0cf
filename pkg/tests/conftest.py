import numpy as np
import pytest

from rewardloop import grid
from rewardloop.dataset import ReplayBuffer


@pytest.fixture
def small_spec():
    """5x5 grid, goal opposite the start, one lava cell, one wall."""
    return grid.GridSpec(width=5, height=5, goal_cells=frozenset({(4, 4)}),
                         lava_cells=frozenset({(2, 2)}),
                         wall_cells=frozenset({(1, 3)}),
                         start_cell=(0, 0), max_steps=30)


@pytest.fixture
def bench_spec():
    """8x8 grid with a lava column and a short wall; shaped true weights."""
    return grid.GridSpec(
        width=8, height=8, goal_cells=frozenset({(7, 7)}),
        lava_cells=frozenset({(3, y) for y in range(1, 7)}),
        wall_cells=frozenset({(5, 2), (5, 3), (5, 4)}),
        start_cell=(0, 0), max_steps=64,
        true_weights=grid.SHAPED_WEIGHTS)


@pytest.fixture
def buffer(small_spec):
    buf = ReplayBuffer(small_spec)
    for i in range(6):
        buf.add_episode(grid.rollout(small_spec, grid.uniform_random_policy,
                                     seed=100 + i, episode_id=f"ep{i}"),
                        policy_id="random")
    return buf


@pytest.fixture
def rng():
    return np.random.default_rng(0)
