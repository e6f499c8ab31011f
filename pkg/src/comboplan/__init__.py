"""Planning for discounted MDPs with product action spaces.

Library layout:

* :mod:`comboplan.linalg` regularized least squares and precision factors
* :mod:`comboplan.features` additive feature maps and the greedy oracle
* :mod:`comboplan.coreset` core set bookkeeping
* :mod:`comboplan.uncertainty` NAIVE / EGSS / DAV uncertainty checks
* :mod:`comboplan.kernel` kernelized counterparts
* :mod:`comboplan.mdp` environments, local-access simulator, DP oracles
* :mod:`comboplan.planner` rollout policy iteration and parameter settings
* :mod:`comboplan.cli` experiment runner
"""

__version__ = "0.1.0"
