# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled rollout kernel; bit-identical twin of ``rollout_py``.

Scalar loops over (step, instance, agent) with the same addressed RNG and
the same floating-point accumulation order as the vectorized Python twin.
"""

from libc.stdint cimport int8_t, int64_t, uint8_t, uint64_t

import numpy as np

UNIFORM, GREEDY, SOFTMAX = 0, 1, 2
DONE, UNCERTAIN = 0, 1

cdef uint64_t GOLDEN = <uint64_t> 0x9E3779B97F4A7C15
cdef uint64_t MIX1 = <uint64_t> 0xBF58476D1CE4E5B9
cdef uint64_t MIX2 = <uint64_t> 0x94D049BB133111EB
cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline double _uniform(uint64_t key, int64_t counter) nogil:
    cdef uint64_t z = key + (<uint64_t> counter) * GOLDEN
    z ^= z >> 30
    z *= MIX1
    z ^= z >> 27
    z *= MIX2
    z ^= z >> 31
    return <double> (z >> 11) * INV53


def run_rollouts(
    int n,
    int horizon,
    double gamma,
    int m,
    int64_t[::1] n_actions,
    int64_t[::1] offsets,
    int64_t[::1] radix,
    int64_t[::1] state_offsets,
    int64_t[::1] move,
    double[::1] reward,
    uint8_t[::1] frozen,
    double[::1] frozen_reward,
    double p_intended,
    int64_t[::1] start_cells,
    int64_t[::1] start_action,
    int policy_kind,
    int64_t[::1] greedy_table,
    double[::1] cdf_table,
    int8_t[::1] check_cache,
    uint8_t[::1] visited,
    uint64_t rng_key,
    int64_t call_index,
    object miss_callback,
):
    cdef int64_t[:, ::1] cells = np.tile(np.asarray(start_cells), (n, 1))
    cdef double[::1] ret = np.zeros(n)
    cdef double g = 1.0
    cdef int64_t queries = 0
    cdef int t, i, i2, j, a, n_act
    cdef int64_t s_j, code, ctr, base, idx, k
    cdef double u, r, total
    cdef int8_t status

    for t in range(horizon + 1):
        for i in range(n):
            code = 0
            for j in range(m):
                code += cells[i, j] * radix[j]
            visited[code] = 1
            if t >= 1:
                status = check_cache[code]
                if status < 0:
                    miss_callback(code)
                    status = check_cache[code]
                if status == 1:
                    total = 0.0
                    for i2 in range(n):
                        total += ret[i2]
                    return UNCERTAIN, total, code, queries
        for i in range(n):
            base = (call_index * (horizon + 1) + t) * n + i
            r = 0.0
            for j in range(m):
                s_j = cells[i, j]
                n_act = <int> n_actions[j]
                ctr = (base * m + j) * 4
                if frozen[state_offsets[j] + s_j]:
                    r += frozen_reward[j]
                    continue
                if t == 0:
                    a = <int> start_action[j]
                elif policy_kind == 1:  # greedy
                    a = <int> greedy_table[state_offsets[j] + s_j]
                else:
                    u = _uniform(rng_key, ctr + 0)
                    if policy_kind == 0:  # uniform
                        a = <int> (u * n_act)
                    else:  # softmax cdf
                        idx = offsets[j] + s_j * n_act
                        a = 0
                        while a < n_act - 1 and u >= cdf_table[idx + a]:
                            a += 1
                if p_intended < 1.0:
                    u = _uniform(rng_key, ctr + 1)
                    if u >= p_intended:
                        k = <int64_t> (_uniform(rng_key, ctr + 2) * (n_act - 1))
                        if k >= a:
                            a = <int> (k + 1)
                        else:
                            a = <int> k
                idx = offsets[j] + s_j * n_act + a
                r += reward[idx]
                cells[i, j] = move[idx]
            ret[i] += g * r
        g *= gamma
        queries += n
    for i in range(n):
        code = 0
        for j in range(m):
            code += cells[i, j] * radix[j]
        visited[code] = 1
    total = 0.0
    for i in range(n):
        total += ret[i]
    return DONE, total, -1, queries
