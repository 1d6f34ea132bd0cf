"""Deterministic gridworld MDP with linear featurization and a value-iteration oracle.

States are cells; the environment is fully observed and deterministic, so
the only stochasticity anywhere comes from explicitly seeded policies.
Returns are discounted as sum_t gamma^(t+1) * r_t, i.e. a reward earned by
the t-th transition is credited at the arrival time step.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import SpecificationError, UsageError

Cell = tuple[int, int]
Action = str

ACTIONS: tuple[Action, ...] = ("up", "down", "left", "right")
_DELTAS: dict[Action, Cell] = {"up": (0, -1), "down": (0, 1), "left": (-1, 0), "right": (1, 0)}

N_FEATURES = 8
DEFAULT_WEIGHTS = (0.0, 0.0, 0.0, 1.0, -1.0, 0.0, -0.01, -0.05)

# Hidden reward used by the recovery experiments: distance-shaped so that
# state-action values are (nearly) all distinct, which makes rank-based
# alignment discriminative.
SHAPED_WEIGHTS = (0.0, -0.5, -0.5, 1.0, -1.0, -0.2, -0.01, -0.05)


@dataclass(frozen=True)
class GridSpec:
    width: int = 8
    height: int = 8
    goal_cells: frozenset[Cell] = frozenset({(7, 7)})
    lava_cells: frozenset[Cell] = frozenset()
    wall_cells: frozenset[Cell] = frozenset()
    start_cell: Cell = (0, 0)
    max_steps: int = 64
    true_weights: tuple[float, ...] = DEFAULT_WEIGHTS

    def __post_init__(self):
        object.__setattr__(self, "goal_cells", frozenset(map(tuple, self.goal_cells)))
        object.__setattr__(self, "lava_cells", frozenset(map(tuple, self.lava_cells)))
        object.__setattr__(self, "wall_cells", frozenset(map(tuple, self.wall_cells)))
        object.__setattr__(self, "start_cell", tuple(self.start_cell))
        object.__setattr__(self, "true_weights", tuple(float(w) for w in self.true_weights))
        self.validate()

    def validate(self) -> None:
        if self.width < 2 or self.height < 2:
            raise SpecificationError("grid must be at least 2x2")
        if self.max_steps < 1:
            raise SpecificationError("max_steps must be >= 1")
        if len(self.true_weights) != N_FEATURES:
            raise SpecificationError(f"true_weights must have length {N_FEATURES}")
        for name, cells in (("goal", self.goal_cells), ("lava", self.lava_cells),
                            ("wall", self.wall_cells)):
            for c in cells:
                if not self.in_bounds(c):
                    raise SpecificationError(f"{name} cell {c} outside grid")
        if self.goal_cells & self.lava_cells or self.goal_cells & self.wall_cells \
                or self.lava_cells & self.wall_cells:
            raise SpecificationError("goal/lava/wall cell sets must be disjoint")
        if not self.goal_cells:
            raise SpecificationError("at least one goal cell required")
        if not self.in_bounds(self.start_cell):
            raise SpecificationError("start cell outside grid")
        if self.start_cell in self.wall_cells or self.start_cell in self.lava_cells:
            raise SpecificationError("start cell must not be a wall or lava cell")

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def is_terminal_cell(self, cell: Cell) -> bool:
        return cell in self.goal_cells or cell in self.lava_cells

    def free_cells(self) -> list[Cell]:
        """Non-wall, non-terminal cells in row-major order."""
        return [(x, y) for y in range(self.height) for x in range(self.width)
                if (x, y) not in self.wall_cells and not self.is_terminal_cell((x, y))]


@dataclass(frozen=True)
class EnvState:
    agent_cell: Cell
    step_index: int = 0
    done_flag: bool = False


@dataclass(frozen=True)
class Transition:
    state: EnvState
    action: Action
    next_state: EnvState


@dataclass(frozen=True)
class Episode:
    episode_id: str
    transitions: tuple[Transition, ...]
    seed: int = 0

    def __len__(self) -> int:
        return len(self.transitions)


def reset(spec: GridSpec, seed: int = 0) -> EnvState:
    spec.validate()
    return EnvState(agent_cell=spec.start_cell, step_index=0, done_flag=False)


def move(spec: GridSpec, cell: Cell, action: Action) -> tuple[Cell, bool]:
    """Destination cell and whether the move was blocked (wall or off-grid)."""
    dx, dy = _DELTAS[action]
    nxt = (cell[0] + dx, cell[1] + dy)
    if not spec.in_bounds(nxt) or nxt in spec.wall_cells:
        return cell, True
    return nxt, False


def step(spec: GridSpec, state: EnvState, action: Action) -> Transition:
    if state.done_flag:
        raise UsageError("step called on a terminated state")
    if action not in _DELTAS:
        raise UsageError(f"unknown action {action!r}")
    nxt_cell, _ = move(spec, state.agent_cell, action)
    idx = state.step_index + 1
    done = spec.is_terminal_cell(nxt_cell) or idx >= spec.max_steps
    return Transition(state, action, EnvState(nxt_cell, idx, done))


def features_for_cells(spec: GridSpec, landed: Cell, blocked: bool) -> np.ndarray:
    """The 8-vector evaluated at the landing cell of a transition.

    Layout: [bias, |dx_goal|/w, |dy_goal|/h, at_goal, on_lava, adjacent_lava,
    step indicator (always 1), blocked_move].
    """
    gx, gy = min(spec.goal_cells, key=lambda g: abs(g[0] - landed[0]) + abs(g[1] - landed[1]))
    at_goal = 1.0 if landed in spec.goal_cells else 0.0
    on_lava = 1.0 if landed in spec.lava_cells else 0.0
    adjacent = 0.0
    for d in _DELTAS.values():
        if (landed[0] + d[0], landed[1] + d[1]) in spec.lava_cells:
            adjacent = 1.0
            break
    return np.array([
        1.0,
        abs(gx - landed[0]) / spec.width,
        abs(gy - landed[1]) / spec.height,
        at_goal,
        on_lava,
        adjacent,
        1.0,
        1.0 if blocked else 0.0,
    ])


def featurize(spec: GridSpec, state: EnvState, action: Action) -> np.ndarray:
    landed, blocked = move(spec, state.agent_cell, action)
    return features_for_cells(spec, landed, blocked)


def true_reward(spec: GridSpec, state: EnvState, action: Action) -> float:
    return float(np.dot(spec.true_weights, featurize(spec, state, action)))


def transition_reward(spec: GridSpec, t: Transition) -> float:
    return true_reward(spec, t.state, t.action)


def episode_return(spec: GridSpec, episode: Episode,
                   reward_fn: Callable[[EnvState, Action], float] | None = None,
                   gamma: float = 1.0) -> float:
    """Discounted return sum_t gamma^(t+1) r_t; with gamma=1 the plain reward sum."""
    fn = reward_fn or (lambda s, a: true_reward(spec, s, a))
    total, disc = 0.0, 1.0
    for t in episode.transitions:
        disc *= gamma
        total += disc * fn(t.state, t.action)
    return total


# A policy maps (state, rng) to an action; the rng argument lets stochastic
# policies stay reproducible under rollout's seed.
Policy = Callable[[EnvState, np.random.Generator], Action]


def uniform_random_policy(state: EnvState, rng: np.random.Generator) -> Action:
    return ACTIONS[rng.integers(len(ACTIONS))]


def tabular_policy(table: dict[Cell, Action]) -> Policy:
    def pick(state: EnvState, rng: np.random.Generator) -> Action:
        return table[state.agent_cell]
    return pick


def rollout(spec: GridSpec, policy: Policy, seed: int,
            max_steps: int | None = None, episode_id: str | None = None) -> Episode:
    rng = np.random.default_rng(seed)
    limit = spec.max_steps if max_steps is None else min(max_steps, spec.max_steps)
    state = reset(spec, seed)
    transitions: list[Transition] = []
    while not state.done_flag and len(transitions) < limit:
        t = step(spec, state, policy(state, rng))
        transitions.append(t)
        state = t.next_state
    return Episode(episode_id=episode_id or f"ep-{seed}", transitions=tuple(transitions),
                   seed=seed)


def cell_index(spec: GridSpec, cell: Cell) -> int:
    return cell[1] * spec.width + cell[0]


def build_tables(spec: GridSpec,
                 reward_fn: Callable[[EnvState, Action], float]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense [S, A] reward/next-state tables plus a terminal mask for the kernels.

    Walls are marked terminal; they are unreachable so their rows are inert.
    """
    n = spec.width * spec.height
    rewards = np.zeros((n, len(ACTIONS)))
    next_states = np.zeros((n, len(ACTIONS)), dtype=np.int64)
    terminal = np.zeros(n, dtype=np.uint8)
    for y in range(spec.height):
        for x in range(spec.width):
            cell = (x, y)
            s = cell_index(spec, cell)
            if spec.is_terminal_cell(cell) or cell in spec.wall_cells:
                terminal[s] = 1
                next_states[s, :] = s
                continue
            for a, action in enumerate(ACTIONS):
                landed, _ = move(spec, cell, action)
                next_states[s, a] = cell_index(spec, landed)
                rewards[s, a] = reward_fn(EnvState(cell), action)
    return rewards, next_states, terminal


@dataclass(frozen=True)
class ValueTable:
    values: dict[Cell, float] = field(default_factory=dict)
    greedy: dict[Cell, Action] = field(default_factory=dict)
    gamma: float = 0.95

    def value(self, cell: Cell) -> float:
        return self.values[cell]

    def policy(self) -> Policy:
        return tabular_policy(self.greedy)


def optimal_values(spec: GridSpec, reward_fn: Callable[[EnvState, Action], float],
                   gamma: float, tol: float = 1e-9) -> ValueTable:
    """Exact value iteration to sup-norm ``tol``; greedy ties break to the
    first action in ACTIONS order."""
    if not (0.0 < gamma < 1.0):
        raise SpecificationError("gamma must lie in (0, 1)")
    from . import kernels

    rewards, next_states, terminal = build_tables(spec, reward_fn)
    v = kernels.value_iteration(rewards, next_states, terminal, gamma, tol)
    policy = kernels.greedy_from_values(rewards, next_states, terminal, gamma, v)
    values: dict[Cell, float] = {}
    greedy: dict[Cell, Action] = {}
    for y in range(spec.height):
        for x in range(spec.width):
            cell = (x, y)
            if cell in spec.wall_cells:
                continue
            s = cell_index(spec, cell)
            values[cell] = float(v[s])
            greedy[cell] = ACTIONS[int(policy[s])]
    return ValueTable(values=values, greedy=greedy, gamma=gamma)


def policy_values(spec: GridSpec, policy_table: dict[Cell, Action],
                  reward_fn: Callable[[EnvState, Action], float], gamma: float,
                  tol: float = 1e-9) -> dict[Cell, float]:
    """Exact policy evaluation by iterating the fixed-policy backup."""
    if not (0.0 < gamma < 1.0):
        raise SpecificationError("gamma must lie in (0, 1)")
    rewards, next_states, terminal = build_tables(spec, reward_fn)
    n = rewards.shape[0]
    v = np.zeros(n)
    act_idx = {a: i for i, a in enumerate(ACTIONS)}
    chosen = np.zeros(n, dtype=np.int64)
    for cell, action in policy_table.items():
        chosen[cell_index(spec, cell)] = act_idx[action]
    rows = np.arange(n)
    r_pi = rewards[rows, chosen]
    ns_pi = next_states[rows, chosen]
    free = terminal == 0
    while True:
        v_new = np.where(free, gamma * (r_pi + v[ns_pi]), 0.0)
        delta = np.abs(v_new - v).max()
        v = v_new
        if delta <= tol:
            break
    return {cell: float(v[cell_index(spec, cell)])
            for cell in policy_table if cell not in spec.wall_cells}


def enumerate_state_actions(spec: GridSpec) -> list[tuple[Cell, Action]]:
    """Every (free cell, action) pair; the canonical evaluation set."""
    return [(cell, action) for cell in spec.free_cells() for action in ACTIONS]


def with_weights(spec: GridSpec, weights) -> GridSpec:
    return replace(spec, true_weights=tuple(float(w) for w in weights))
