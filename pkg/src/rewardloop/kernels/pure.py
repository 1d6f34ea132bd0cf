"""NumPy/pure-Python reference implementation of the hot kernels.

Bit-compatible with the compiled extension in ``_native.pyx``: both use the
same splitmix64 RNG and the same IEEE double arithmetic, so results are
identical, only slower.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    z = z ^ (z >> 31)
    return state, z


def _uniform(state: int) -> tuple[int, float]:
    state, z = _splitmix64(state)
    return state, (z >> 11) * (2.0 ** -53)


def value_iteration(rewards, next_state, terminal, gamma, tol=1e-9, max_iter=100000):
    """Sup-norm value iteration under the backup V(s) = max_a gamma*(r + V(s')).

    ``rewards``/``next_state`` are [S, A] tables of a deterministic MDP;
    ``terminal`` marks absorbing states (value pinned to 0).
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    next_state = np.asarray(next_state, dtype=np.int64)
    terminal = np.asarray(terminal, dtype=np.uint8)
    free = terminal == 0
    v = np.zeros(rewards.shape[0], dtype=np.float64)
    for _ in range(max_iter):
        backup = gamma * (rewards + v[next_state])
        v_new = np.where(free, backup.max(axis=1), 0.0)
        delta = np.abs(v_new - v).max()
        v = v_new
        if delta <= tol:
            break
    return v


def greedy_from_values(rewards, next_state, terminal, gamma, v):
    """Greedy action per state from a value table; ties break to the lowest index."""
    rewards = np.asarray(rewards, dtype=np.float64)
    next_state = np.asarray(next_state, dtype=np.int64)
    q = gamma * (rewards + np.asarray(v)[next_state])
    policy = np.argmax(q, axis=1).astype(np.int64)
    policy[np.asarray(terminal, dtype=np.uint8) == 1] = 0
    return policy


def q_learning(rewards, next_state, terminal, start_state, gamma, alpha, epsilon,
               episodes, max_steps, seed):
    """Tabular epsilon-greedy Q-learning on a deterministic MDP.

    Deterministic per seed; greedy ties break to the lowest action index.
    Returns the Q-table with the backup Q(s,a) <- gamma*(r + max_a' Q(s',a')).
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    next_state = np.asarray(next_state, dtype=np.int64)
    terminal = np.asarray(terminal, dtype=np.uint8)
    n_states, n_actions = rewards.shape
    q = np.zeros((n_states, n_actions), dtype=np.float64)
    state = int(seed) & MASK64
    for _ in range(episodes):
        s = start_state
        for _ in range(max_steps):
            if terminal[s]:
                break
            state, u = _uniform(state)
            if u < epsilon:
                state, u2 = _uniform(state)
                a = int(u2 * n_actions)
                if a >= n_actions:
                    a = n_actions - 1
            else:
                a = 0
                best = q[s, 0]
                for j in range(1, n_actions):
                    if q[s, j] > best:
                        best = q[s, j]
                        a = j
            ns = next_state[s, a]
            future = 0.0 if terminal[ns] else q[ns].max()
            q[s, a] += alpha * (gamma * (rewards[s, a] + future) - q[s, a])
            s = ns
    return q
