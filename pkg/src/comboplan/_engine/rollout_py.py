"""Pure-Python rollout kernel, vectorized across rollout instances.

Twin of the compiled kernel in ``rollout_cy.pyx``: both execute the n
rollouts of one core-set element in lockstep over time steps and must
produce bit-identical results. Randomness is addressed, not streamed; the
draw for (call, t, instance, agent, purpose) is a pure function of those
integers and the stream key, so evaluation order is irrelevant.

At each step t >= 1 the current state of every instance is looked up in the
check cache (instances scanned in order); a cache miss triggers the
``miss_callback``, an uncertain state aborts the call before any further
simulator queries.
"""

from __future__ import annotations

import numpy as np

from ..rng import counter_uniform_array

UNIFORM, GREEDY, SOFTMAX = 0, 1, 2
DONE, UNCERTAIN = 0, 1
UNKNOWN, CERTAIN_ST, UNCERTAIN_ST = -1, 0, 1


def run_rollouts(
    n,
    horizon,
    gamma,
    m,
    n_actions,
    offsets,
    radix,
    state_offsets,
    move,
    reward,
    frozen,
    frozen_reward,
    p_intended,
    start_cells,
    start_action,
    policy_kind,
    greedy_table,
    cdf_table,
    check_cache,
    visited,
    rng_key,
    call_index,
    miss_callback,
):
    cells = np.tile(np.asarray(start_cells, dtype=np.int64), (n, 1))
    ret = np.zeros(n)
    g = 1.0
    queries = 0
    instance_ids = np.arange(n, dtype=np.int64)
    for t in range(horizon + 1):
        codes = cells @ radix
        visited[codes] = 1
        if t >= 1:
            statuses = check_cache[codes]
            if (statuses == UNKNOWN).any():
                for i in np.nonzero(statuses == UNKNOWN)[0]:
                    code = int(codes[i])
                    if check_cache[code] == UNKNOWN:
                        miss_callback(code)
                statuses = check_cache[codes]
            flagged = np.nonzero(statuses == UNCERTAIN_ST)[0]
            if flagged.size:
                total = 0.0
                for i in range(n):
                    total += float(ret[i])
                return UNCERTAIN, total, int(codes[flagged[0]]), queries
        base = (call_index * (horizon + 1) + t) * n + instance_ids
        r_total = np.zeros(n)
        for j in range(m):
            s_j = cells[:, j]
            frozen_j = frozen[state_offsets[j] + s_j].astype(bool)
            n_act = int(n_actions[j])
            ctr = (base * m + j) * 4
            if t == 0:
                a = np.full(n, int(start_action[j]), dtype=np.int64)
            elif policy_kind == GREEDY:
                a = greedy_table[state_offsets[j] + s_j]
            else:
                u = counter_uniform_array(rng_key, ctr + 0)
                if policy_kind == UNIFORM:
                    a = (u * n_act).astype(np.int64)
                else:
                    rows = offsets[j] + s_j * n_act
                    cdf = cdf_table[rows[:, None] + np.arange(n_act)[None, :]]
                    a = (u[:, None] >= cdf).sum(axis=1).astype(np.int64)
            if p_intended < 1.0:
                u_noise = counter_uniform_array(rng_key, ctr + 1)
                u_pick = counter_uniform_array(rng_key, ctr + 2)
                k = (u_pick * (n_act - 1)).astype(np.int64)
                noisy = u_noise >= p_intended
                a = np.where(noisy, k + (k >= a), a)
            idx = offsets[j] + s_j * n_act + a
            r_total = r_total + np.where(frozen_j, frozen_reward[j], reward[idx])
            cells[:, j] = np.where(frozen_j, s_j, move[idx])
        ret += g * r_total
        g *= gamma
        queries += n
    codes = cells @ radix
    visited[codes] = 1
    total = 0.0
    for i in range(n):
        total += float(ret[i])
    return DONE, total, -1, queries
