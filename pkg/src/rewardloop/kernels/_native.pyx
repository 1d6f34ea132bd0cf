# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: value iteration and tabular Q-learning inner loops.

Must stay bit-compatible with ``pure.py`` (same splitmix64 RNG, same
arithmetic order).
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef unsigned long long u64


cdef inline u64 _splitmix64(u64* state, ) nogil:
    cdef u64 z
    state[0] = state[0] + <u64>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <u64>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <u64>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline double _uniform(u64* state) nogil:
    return (_splitmix64(state) >> 11) * (2.0 ** -53)


def value_iteration(rewards, next_state, terminal, double gamma,
                    double tol=1e-9, long max_iter=100000):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] r = np.ascontiguousarray(rewards, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] ns = np.ascontiguousarray(next_state, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] term = np.ascontiguousarray(terminal, dtype=np.uint8)
    cdef long n_states = r.shape[0]
    cdef long n_actions = r.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] v = np.zeros(n_states, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] v_new = np.zeros(n_states, dtype=np.float64)
    cdef long i, s, a
    cdef double best, cand, delta, d
    for i in range(max_iter):
        delta = 0.0
        for s in range(n_states):
            if term[s]:
                v_new[s] = 0.0
                continue
            best = gamma * (r[s, 0] + v[ns[s, 0]])
            for a in range(1, n_actions):
                cand = gamma * (r[s, a] + v[ns[s, a]])
                if cand > best:
                    best = cand
            v_new[s] = best
        for s in range(n_states):
            d = v_new[s] - v[s]
            if d < 0:
                d = -d
            if d > delta:
                delta = d
            v[s] = v_new[s]
        if delta <= tol:
            break
    return v


def greedy_from_values(rewards, next_state, terminal, double gamma, values):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] r = np.ascontiguousarray(rewards, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] ns = np.ascontiguousarray(next_state, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] term = np.ascontiguousarray(terminal, dtype=np.uint8)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef long n_states = r.shape[0]
    cdef long n_actions = r.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] policy = np.zeros(n_states, dtype=np.int64)
    cdef long s, a, best_a
    cdef double best, cand
    for s in range(n_states):
        if term[s]:
            policy[s] = 0
            continue
        best_a = 0
        best = gamma * (r[s, 0] + v[ns[s, 0]])
        for a in range(1, n_actions):
            cand = gamma * (r[s, a] + v[ns[s, a]])
            if cand > best:
                best = cand
                best_a = a
        policy[s] = best_a
    return policy


def q_learning(rewards, next_state, terminal, long start_state, double gamma,
               double alpha, double epsilon, long episodes, long max_steps,
               unsigned long long seed):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] r = np.ascontiguousarray(rewards, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] ns = np.ascontiguousarray(next_state, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] term = np.ascontiguousarray(terminal, dtype=np.uint8)
    cdef long n_states = r.shape[0]
    cdef long n_actions = r.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] q = np.zeros((n_states, n_actions), dtype=np.float64)
    cdef u64 state = seed
    cdef long ep, t, s, a, j, nxt
    cdef double u, best, future
    for ep in range(episodes):
        s = start_state
        for t in range(max_steps):
            if term[s]:
                break
            u = _uniform(&state)
            if u < epsilon:
                u = _uniform(&state)
                a = <long>(u * n_actions)
                if a >= n_actions:
                    a = n_actions - 1
            else:
                a = 0
                best = q[s, 0]
                for j in range(1, n_actions):
                    if q[s, j] > best:
                        best = q[s, j]
                        a = j
            nxt = ns[s, a]
            if term[nxt]:
                future = 0.0
            else:
                future = q[nxt, 0]
                for j in range(1, n_actions):
                    if q[nxt, j] > future:
                        future = q[nxt, j]
            q[s, a] = q[s, a] + alpha * (gamma * (r[s, a] + future) - q[s, a])
            s = nxt
    return q
