"""Three-state coordination environment for two agents.

From the start state the first agent's action selects which absorbing loop
the pair enters; inside each loop only the second agent's action decides
whether the loop pays. The additive two-dimensional features below make
every policy's Q-function exactly linear, while optimal play still requires
the first agent to anticipate the second agent's loop behavior.
"""

from __future__ import annotations

import numpy as np

from ..features import AdditiveFeatureMap
from .base import LocalAccessSimulator
from .dp import JointModel

START, LOOP_A, LOOP_B = 0, 1, 2

_PHI1 = {
    (START, 0): np.array([0.0, 1.0]),
    (START, 1): np.array([1.0, 0.0]),
}
_PHI2 = {
    (LOOP_A, 0): np.array([1.0, 0.0]),
    (LOOP_A, 1): np.array([2.0, 0.0]),
    (LOOP_B, 0): np.array([0.0, 2.0]),
    (LOOP_B, 1): np.array([0.0, 1.0]),
}
_ZERO = np.zeros(2)


def coordination_feature_map() -> AdditiveFeatureMap:
    """Additive d=2 map under which all policies are exactly realizable."""

    def agent_eval(i: int, value, a: int) -> np.ndarray:
        table = _PHI1 if i == 0 else _PHI2
        return table.get((value, a), _ZERO)

    return AdditiveFeatureMap(
        m=2, dim=2, action_sizes=(2, 2), agent_eval=agent_eval, layout=None
    )


class CoordinationEnv(LocalAccessSimulator):
    """Deterministic two-agent MDP with states start / loop A / loop B."""

    m = 2
    action_sizes = (2, 2)

    def __init__(self, seed: int = 0):
        super().__init__(seed=seed)

    def _initial_value(self):
        return START

    def _transition(self, value, action):
        a1, a2 = int(action[0]), int(action[1])
        if value == START:
            return (LOOP_A if a1 == 1 else LOOP_B), 0.0
        if value == LOOP_A:
            return LOOP_A, 1.0 if a2 == 1 else 0.0
        return LOOP_B, 1.0 if a2 == 0 else 0.0

    def feature_map(self) -> AdditiveFeatureMap:
        return coordination_feature_map()

    def dp_model(self) -> JointModel:
        states = [START, LOOP_A, LOOP_B]
        actions = [(a1, a2) for a1 in range(2) for a2 in range(2)]
        p = np.zeros((3, 4, 3))
        r = np.zeros((3, 4))
        for s_idx, s in enumerate(states):
            for a_idx, act in enumerate(actions):
                env_copy_next, reward = self._peek(s, act)
                p[s_idx, a_idx, env_copy_next] = 1.0
                r[s_idx, a_idx] = reward
        return JointModel(states=states, actions=actions, p=p, r=r, start=0)

    def _peek(self, value, action):
        return self._transition(value, action)
