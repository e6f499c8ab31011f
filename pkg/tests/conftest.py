import numpy as np

from comboplan.features import AdditiveFeatureMap


def random_additive_map(rng, m, n_actions, dim, n_values=4, norm_cap=None):
    """Dense random per-agent features over a small set of integer states.

    With ``norm_cap`` set, joint features are rescaled so that every joint
    norm over all (value, action) pairs is at most the cap.
    """
    table = rng.standard_normal((n_values, m, n_actions, dim))
    if norm_cap is not None:
        worst = 0.0
        for v in range(n_values):
            for joint in np.ndindex(*(n_actions,) * m):
                phi = sum(table[v, i, a] for i, a in enumerate(joint))
                worst = max(worst, float(np.linalg.norm(phi)))
        if worst > 0:
            table *= norm_cap / worst

    def agent_eval(i, value, a):
        return table[value, i, a]

    return AdditiveFeatureMap(
        m=m,
        dim=dim,
        action_sizes=(n_actions,) * m,
        agent_eval=agent_eval,
        layout=None,
    )


class CountingMap:
    """Wrap a feature map and count joint feature evaluations."""

    def __init__(self, fmap):
        self._fmap = fmap
        self.joint_calls = 0

    def __getattr__(self, name):
        return getattr(self._fmap, name)

    def joint(self, state, action):
        self.joint_calls += 1
        return self._fmap.joint(state, action)
