"""Uncertainty checks over a frozen core set.

A state passes a check when no probed action's feature leaves the good set
``{phi : phi^T V_C^{-1} phi <= tau}``. The three finite-dimensional probes
trade exhaustiveness for oracle calls:

* NAIVE scans every joint action (exact, cost |A|).
* EGSS probes the 2d whitened directions through the greedy oracle; a pass
  certifies every action is within ``d * tau``.
* DAV probes only the default action vector and its single-agent deviations;
  a pass certifies the deviation set, which suffices for additive models.

All comparisons are strict (``> tau`` flags, ``<= tau`` passes). Checks are
pure functions of (state, core set snapshot) and may be evaluated
concurrently against a frozen snapshot.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .coreset import CoreElement, CoreSet
from .features import enumerate_joint_actions
from .linalg import uncertainty_quad_form

NAIVE_ACTION_LIMIT = 10**6

CERTAIN = "certain"
UNCERTAIN = "uncertain"


@dataclass
class CheckOutcome:
    status: str
    result: Optional[CoreElement] = None

    @property
    def is_uncertain(self) -> bool:
        return self.status == UNCERTAIN


def _flagged(state, action, phi, quad) -> CheckOutcome:
    element = CoreElement(
        state=state, action=tuple(action), phi=phi, q=None, uncertainty=quad
    )
    return CheckOutcome(UNCERTAIN, element)


def check_naive(state, core: CoreSet, tau: float, fmap) -> CheckOutcome:
    """Scan the joint action set in lexicographic order; exact but O(|A|)."""
    if fmap.joint_action_count() > NAIVE_ACTION_LIMIT:
        raise ValueError(
            f"joint action set of size {fmap.joint_action_count()} is too large "
            "to enumerate; use the EGSS or DAV check"
        )
    for action in enumerate_joint_actions(fmap.action_sizes):
        phi = fmap.joint(state, action)
        quad = uncertainty_quad_form(core.precision, phi)
        if quad > tau:
            return _flagged(state, action, phi, quad)
    return CheckOutcome(CERTAIN)


def check_egss(state, core: CoreSet, tau: float, oracle) -> CheckOutcome:
    """Probe whitened basis directions with the greedy oracle.

    For each direction v in (+e_0, -e_0, +e_1, ...) the oracle maximizes
    ``<Lv, phi(s, a)>`` over actions; a squared score above tau certifies the
    maximizer itself as uncertain (the squared score underestimates its
    quadratic form). If all 2d probes pass, every action's quadratic form is
    at most d * tau.

    The whitening matrix is cached on the precision state, so it is
    factored once per core-set insertion rather than once per check.
    """
    whitening = core.precision.whitening()
    for index in range(core.dim):
        for sign in (1.0, -1.0):
            direction = sign * whitening[:, index]
            action = oracle.argmax(direction, state)
            phi = oracle.feature(state, action)
            score = float(direction @ phi)
            if score * score > tau:
                quad = uncertainty_quad_form(core.precision, phi)
                return _flagged(state, action, phi, quad)
    return CheckOutcome(CERTAIN)


def check_dav(state, core: CoreSet, tau: float, abar, fmap) -> CheckOutcome:
    """Probe the default action vector and its single-agent deviations.

    Scans agent-major: ``(a^(j), abar^(-j))`` for each agent j and action
    a^(j) in order, abar itself included (once per agent position, as the
    unmodified deviation). Returns the first violator.
    """
    abar = tuple(abar)
    if len(abar) != fmap.m:
        raise ValueError(f"default action {abar!r} must have {fmap.m} components")
    seen = {}
    for j in range(fmap.m):
        for a in range(fmap.action_sizes[j]):
            probe = abar[:j] + (a,) + abar[j + 1 :]
            if probe in seen:
                continue
            phi = fmap.joint(state, probe)
            quad = uncertainty_quad_form(core.precision, phi)
            seen[probe] = quad
            if quad > tau:
                return _flagged(state, probe, phi, quad)
    return CheckOutcome(CERTAIN)
