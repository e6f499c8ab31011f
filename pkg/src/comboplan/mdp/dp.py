"""Exact dynamic programming oracles for enumerable environments.

Two model shapes are supported. ``JointModel`` is a plain dense MDP over an
explicit state list. ``ProductModel`` is a list of per-agent factors; its
Bellman sweeps still run over the full joint state space (nothing about
optimality is assumed to factorize), but expectations are computed by
contracting one agent at a time, which keeps the grid experiments cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

JOINT_STATE_LIMIT = 200_000
DEFAULT_TOL = 1e-12
MAX_SWEEPS = 100_000


@dataclass
class FactorModel:
    """One agent's board: P (S, A, S), expected reward R (S, A), start index."""

    p: np.ndarray
    r: np.ndarray
    start: int


@dataclass
class ProductModel:
    """Independent per-agent transitions with additive rewards."""

    factors: list

    @property
    def state_sizes(self) -> tuple:
        return tuple(f.p.shape[0] for f in self.factors)

    @property
    def action_sizes(self) -> tuple:
        return tuple(f.p.shape[1] for f in self.factors)

    @property
    def joint_states(self) -> int:
        return int(np.prod([s for s in self.state_sizes]))

    @property
    def start_cells(self) -> tuple:
        return tuple(f.start for f in self.factors)


@dataclass
class JointModel:
    """Dense enumerated MDP: explicit states, joint actions, P and R."""

    states: list
    actions: list
    p: np.ndarray  # (S, A, S)
    r: np.ndarray  # (S, A)
    start: int


@dataclass
class VIResult:
    """Converged values and greedy policy over the enumerated joint space."""

    v: np.ndarray  # flat, C-order over the joint state coding
    policy: np.ndarray  # flat, joint action ordinal (lexicographic)
    start_index: int
    state_sizes: tuple | None = None
    action_sizes: tuple | None = None
    states: list | None = None
    actions: list | None = None
    sweeps: int = 0

    @property
    def v_start(self) -> float:
        return float(self.v[self.start_index])


def _guard_size(n: int) -> None:
    if n > JOINT_STATE_LIMIT:
        raise ValueError(
            f"joint state space of size {n} exceeds the DP limit {JOINT_STATE_LIMIT}"
        )


def _product_action_rewards(model: ProductModel) -> np.ndarray:
    """R per (joint action ordinal, flat joint state), built once."""
    sizes = model.state_sizes
    m = len(sizes)
    out = []

    def rec(i, acc):
        if i == m:
            out.append(acc.reshape(-1).copy())
            return
        f = model.factors[i]
        shape = [1] * m
        shape[i] = sizes[i]
        for a in range(f.r.shape[1]):
            rec(i + 1, acc + f.r[:, a].reshape(shape))

    rec(0, np.zeros(sizes))
    return np.asarray(out)


def _product_expected_values(model: ProductModel, v: np.ndarray):
    """E[V(s') | s, a] for every joint action, in lexicographic action order.

    Contracts the value tensor against one factor kernel at a time; prefixes
    are shared across joint actions, so m agents with A actions each cost
    A + A^2 + ... + A^m small tensordots instead of A^m * m.
    """
    m = len(model.factors)
    results = []

    def rec(i, w):
        if i == m:
            results.append(w.reshape(-1))
            return
        p = model.factors[i].p
        for a in range(p.shape[1]):
            rec(i + 1, np.tensordot(w, p[:, a, :], axes=([0], [1])))

    rec(0, v)
    return results


def product_value_iteration(
    model: ProductModel, gamma: float, tol: float = DEFAULT_TOL
) -> VIResult:
    """Joint-space value iteration for a product model."""
    _guard_size(model.joint_states)
    sizes = model.state_sizes
    rewards = _product_action_rewards(model)
    n_actions = rewards.shape[0]
    v = np.zeros(sizes)
    sweeps = 0
    while True:
        expected = _product_expected_values(model, v)
        best = rewards[0] + gamma * expected[0]
        arg = np.zeros(best.shape[0], dtype=np.int64)
        for a in range(1, n_actions):
            q = rewards[a] + gamma * expected[a]
            better = q > best
            best = np.where(better, q, best)
            arg[better] = a
        delta = float(np.max(np.abs(best.reshape(sizes) - v)))
        v = best.reshape(sizes)
        sweeps += 1
        if delta < tol or sweeps >= MAX_SWEEPS:
            break
    start = int(np.ravel_multi_index(model.start_cells, sizes))
    return VIResult(
        v=v.reshape(-1),
        policy=arg,
        start_index=start,
        state_sizes=sizes,
        action_sizes=model.action_sizes,
        sweeps=sweeps,
    )


def joint_value_iteration(
    model: JointModel, gamma: float, tol: float = DEFAULT_TOL
) -> VIResult:
    """Dense value iteration for an explicitly enumerated MDP."""
    _guard_size(len(model.states))
    v = np.zeros(len(model.states))
    sweeps = 0
    while True:
        q = model.r + gamma * np.einsum("sat,t->sa", model.p, v)
        new_v = q.max(axis=1)
        delta = float(np.max(np.abs(new_v - v)))
        v = new_v
        sweeps += 1
        if delta < tol or sweeps >= MAX_SWEEPS:
            break
    policy = q.argmax(axis=1)
    return VIResult(
        v=v,
        policy=policy.astype(np.int64),
        start_index=model.start,
        states=model.states,
        actions=model.actions,
        sweeps=sweeps,
    )


def tabular_value_iteration(env, gamma: float, tol: float = DEFAULT_TOL) -> VIResult:
    """Bellman fixed point of an enumerable environment.

    Accepts anything with a ``dp_model`` hook. Raises if the joint state
    space is too large to enumerate.
    """
    model = env.dp_model() if hasattr(env, "dp_model") else env
    if isinstance(model, ProductModel):
        return product_value_iteration(model, gamma, tol)
    if isinstance(model, JointModel):
        return joint_value_iteration(model, gamma, tol)
    raise ValueError(f"no DP model available for {type(env).__name__}")


def factor_value_iteration(factor: FactorModel, gamma: float, tol: float = DEFAULT_TOL):
    """Optimal value of a single factor in isolation (invariant checks)."""
    v = np.zeros(factor.p.shape[0])
    while True:
        q = factor.r + gamma * np.einsum("sat,t->sa", factor.p, v)
        new_v = q.max(axis=1)
        delta = float(np.max(np.abs(new_v - v)))
        v = new_v
        if delta < tol:
            return v


def evaluate_factorized_policy(
    model: ProductModel, per_agent_probs: Sequence[np.ndarray], gamma: float
) -> float:
    """Exact value at the start state of a policy that factorizes per agent.

    ``per_agent_probs[i]`` has shape (S_i, A_i). Because transitions and
    rewards are per-agent and the policy factorizes, each factor solves its
    own (I - gamma P_pi) system and values add up.
    """
    total = 0.0
    for factor, probs in zip(model.factors, per_agent_probs):
        n_s = factor.p.shape[0]
        p_pi = np.einsum("sa,sat->st", probs, factor.p)
        r_pi = np.einsum("sa,sa->s", probs, factor.r)
        v = np.linalg.solve(np.eye(n_s) - gamma * p_pi, r_pi)
        total += float(v[factor.start])
    return total


def evaluate_joint_policy(model: JointModel, probs: np.ndarray, gamma: float) -> float:
    """Exact value at the start of a stochastic policy over joint actions."""
    n_s = len(model.states)
    p_pi = np.einsum("sa,sat->st", probs, model.p)
    r_pi = np.einsum("sa,sa->s", probs, model.r)
    v = np.linalg.solve(np.eye(n_s) - gamma * p_pi, r_pi)
    return float(v[model.start])


def evaluate_joint_policy_table(
    model: ProductModel, table: np.ndarray, gamma: float, tol: float = DEFAULT_TOL
) -> float:
    """Value of a deterministic joint-action table on a product model.

    Used to check VI's own greedy policy; runs policy-evaluation sweeps on
    the joint space.
    """
    _guard_size(model.joint_states)
    sizes = model.state_sizes
    rewards = _product_action_rewards(model)
    flat_states = rewards.shape[1]
    idx = np.arange(flat_states)
    r_pi = rewards[table, idx]
    v = np.zeros(sizes)
    while True:
        expected = _product_expected_values(model, v)
        ev = np.asarray(expected)[table, idx]
        new_v = r_pi + gamma * ev
        delta = float(np.max(np.abs(new_v.reshape(sizes) - v)))
        v = new_v.reshape(sizes)
        if delta < tol:
            break
    start = int(np.ravel_multi_index(model.start_cells, sizes))
    return float(v.reshape(-1)[start])
