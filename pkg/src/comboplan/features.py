"""Feature maps over product action spaces and the greedy oracle.

The joint feature of an action vector ``a = (a_1, ..., a_m)`` is the sum of
per-agent features ``phi(s, a) = sum_i phi_i(s, a_i)``. Linear functions of
such features are maximized one agent at a time, which is what makes greedy
policies tractable when the joint action set is a large product.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np


def _value_of(state):
    """Accept either a raw state value or a StateHandle carrying one."""
    return getattr(state, "value", state)


@dataclass(frozen=True)
class TabularLayout:
    """Index layout for block one-hot features over (agent, state, action).

    Feature index of agent ``i`` in state ``s`` taking action ``a`` is
    ``offset[i] + s * n_actions[i] + a``; each agent owns a disjoint block,
    so joint features of distinct agents never overlap.
    """

    n_states: tuple
    n_actions: tuple
    scale: float

    @property
    def offsets(self) -> tuple:
        out, acc = [], 0
        for s, a in zip(self.n_states, self.n_actions):
            out.append(acc)
            acc += s * a
        return tuple(out)

    @property
    def dim(self) -> int:
        return int(sum(s * a for s, a in zip(self.n_states, self.n_actions)))

    def index(self, agent: int, state: int, action: int) -> int:
        return self.offsets[agent] + state * self.n_actions[agent] + action


@dataclass(frozen=True)
class AdditiveFeatureMap:
    """Per-agent feature maps sharing one ambient dimension.

    ``agent_eval(i, state_value, a)`` returns phi_i as a dense vector.
    ``layout`` is set for block one-hot maps and lets fast code paths skip
    dense vectors entirely.
    """

    m: int
    dim: int
    action_sizes: tuple
    agent_eval: Callable
    layout: Optional[TabularLayout] = None

    def phi_agent(self, i: int, state, action: int) -> np.ndarray:
        return self.agent_eval(i, _value_of(state), int(action))

    def joint(self, state, action) -> np.ndarray:
        if len(action) != self.m:
            raise ValueError(f"action {action!r} must have {self.m} components")
        value = _value_of(state)
        out = np.zeros(self.dim)
        for i, a in enumerate(action):
            phi = self.agent_eval(i, value, int(a))
            if phi.shape != (self.dim,):
                raise ValueError(
                    f"agent {i} produced shape {phi.shape}, expected ({self.dim},)"
                )
            out += phi
        return out

    def joint_action_count(self) -> int:
        count = 1
        for size in self.action_sizes:
            count *= size
        return count


def joint_feature(fmap: AdditiveFeatureMap, state, action) -> np.ndarray:
    """Exact component sum ``sum_i phi_i(s, a_i)``."""
    return fmap.joint(state, action)


def greedy_additive(fmap: AdditiveFeatureMap, w: np.ndarray, state) -> tuple:
    """Exact maximizer of ``w . phi(s, a)`` over the product action set.

    Component i is the argmax of ``w . phi_i(s, .)`` over agent i's actions;
    ties go to the lowest action index, so the joint winner is the
    lexicographically smallest maximizer.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (fmap.dim,):
        raise ValueError(f"w has shape {w.shape}, expected ({fmap.dim},)")
    value = _value_of(state)
    best = []
    for i, size in enumerate(fmap.action_sizes):
        if size < 1:
            raise ValueError(f"agent {i} has an empty action set")
        scores = [float(w @ fmap.agent_eval(i, value, a)) for a in range(size)]
        best.append(int(np.argmax(scores)))
    return tuple(best)


def enumerate_joint_actions(action_sizes: Sequence[int]):
    """All joint actions in lexicographic order."""
    return itertools.product(*(range(s) for s in action_sizes))


class AdditiveGreedyOracle:
    """Greedy oracle induced by an additive map.

    Exposes the two calls uncertainty checks need: an exact linear argmax
    over the action set and feature evaluation at the returned action.
    Users with non-additive maps can plug in any object with this surface.
    """

    def __init__(self, fmap: AdditiveFeatureMap):
        self.fmap = fmap
        self.dim = fmap.dim

    def argmax(self, w: np.ndarray, state) -> tuple:
        return greedy_additive(self.fmap, w, state)

    def feature(self, state, action) -> np.ndarray:
        return self.fmap.joint(state, action)


def tabular_additive_map(
    n_states: Sequence[int], n_actions: Sequence[int], scale: float | None = None
) -> AdditiveFeatureMap:
    """Block one-hot map: indicator of (agent, agent state, action).

    ``scale`` defaults to ``1/sqrt(m)`` so the joint feature has 2-norm
    exactly 1 (agent blocks are disjoint, one indicator per agent).
    """
    n_states = tuple(int(s) for s in n_states)
    n_actions = tuple(int(a) for a in n_actions)
    m = len(n_states)
    if scale is None:
        scale = 1.0 / np.sqrt(m)
    layout = TabularLayout(n_states, n_actions, float(scale))
    dim = layout.dim
    offsets = layout.offsets

    def agent_eval(i: int, value, a: int) -> np.ndarray:
        phi = np.zeros(dim)
        phi[offsets[i] + value[i] * n_actions[i] + a] = scale
        return phi

    return AdditiveFeatureMap(
        m=m, dim=dim, action_sizes=n_actions, agent_eval=agent_eval, layout=layout
    )


def grid4_feature_map(m: int = 4, size: int = 3, n_actions: int = 4) -> AdditiveFeatureMap:
    """One-hot (agent, cell, action) map for agents on a ``size x size`` grid.

    Defaults give dimension ``4 * 9 * 4 = 144``. The ``1/sqrt(m)`` scaling
    keeps joint features at unit norm and is absorbed by the regression
    weights, so greedy actions are unaffected.
    """
    cells = size * size
    return tabular_additive_map([cells] * m, [n_actions] * m)
