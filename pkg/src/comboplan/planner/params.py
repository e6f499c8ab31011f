"""Parameter settings that realize the suboptimality guarantees.

Given a target gap kappa, a confidence delta, a weight-norm bound b and the
discount, these formulas fix tau, lambda, the rollout length H, iteration
count K, rollout count n and (for softmax variants) the learning rate alpha
so that the error budget splits cleanly: each of the four leading error
terms stays under its share of kappa, and the failure probability stays
under delta. H, K and n are rounded up to integers.

The variant string selects the check style: the deviation-based check pays
a factor of ``2m - 1`` where the whitened-direction search pays ``sqrt(d)``.
Kernel variants replace the dimension with a caller-supplied critical
information gain, which plays the role of the core set cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..coreset import cmax_bound
from .core import PlannerConfig

VARIANTS = (
    "lspi-egss",
    "lspi-dav",
    "politex-egss",
    "politex-dav",
    "kernel-lspi-dav",
    "kernel-politex-dav",
)


@dataclass
class TheoremParameters:
    """Derived run parameters plus the intermediates behind them."""

    variant: str
    kappa: float
    delta: float
    b: float
    gamma: float
    d_or_gain: float
    m: int
    epsilon: float
    a_max: int | None
    zeta: float
    tau: float
    lam: float
    cmax: float
    theta: float
    horizon: int
    k_iterations: int
    n_rollouts: int
    eta: float
    alpha: float | None

    def planner_config(self, seed: int = 0, **overrides) -> PlannerConfig:
        algorithm = "politex" if "politex" in self.variant else "lspi"
        check = "kernel-dav" if self.variant.startswith("kernel") else (
            "egss" if self.variant.endswith("egss") else "dav"
        )
        fields = dict(
            algorithm=algorithm,
            check=check,
            k_iterations=self.k_iterations,
            n_rollouts=self.n_rollouts,
            horizon=self.horizon,
            tau=self.tau,
            lam=self.lam,
            gamma=self.gamma,
            alpha=self.alpha if self.alpha is not None else 1.0,
            seed=seed,
            reset=True,
        )
        fields.update(overrides)
        return PlannerConfig(**fields)


def _kappa_for_epsilon(variant, epsilon, b, gamma, d_or_gain, m, zeta) -> float:
    """Target gap induced by misspecification, per printed substitution."""
    log_term = math.sqrt(1.0 + math.log1p(b * b / (epsilon * epsilon * d_or_gain)))
    if variant == "lspi-egss":
        return 32.0 * epsilon * d_or_gain * log_term / (1.0 - gamma) ** 2
    if variant == "lspi-dav":
        return 32.0 * epsilon * math.sqrt(d_or_gain) * m * log_term / (1.0 - gamma) ** 2
    if variant in ("politex-egss", "politex-dav"):
        return 16.0 * epsilon * math.sqrt(d_or_gain) * zeta * log_term / (1.0 - gamma)
    if variant == "kernel-lspi-dav":
        return 16.0 * epsilon * m * math.sqrt(d_or_gain) / (1.0 - gamma) ** 2
    return 8.0 * epsilon * m * math.sqrt(d_or_gain) / (1.0 - gamma)


def theorem_parameters(
    variant: str,
    kappa: float,
    delta: float,
    b: float,
    gamma: float,
    d_or_gain: float,
    m: int = 1,
    epsilon: float = 0.0,
    a_max: int | None = None,
) -> TheoremParameters:
    """Fill every formulaic run parameter for the chosen variant.

    ``d_or_gain`` is the feature dimension for finite variants and the
    critical information gain for kernel variants. ``a_max`` (the largest
    per-agent action count) is required by the softmax variants, whose
    iteration count grows with ``m * log(a_max)``.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if not (kappa > 0 and b > 0 and 0 < delta < 1 and 0 < gamma < 1):
        raise ValueError("need kappa > 0, b > 0, delta in (0,1), gamma in (0,1)")
    if d_or_gain < 1 or m < 1 or epsilon < 0:
        raise ValueError("d_or_gain >= 1, m >= 1 and epsilon >= 0 required")
    politex = "politex" in variant
    kernel = variant.startswith("kernel")
    if politex and a_max is None:
        raise ValueError("softmax variants need a_max, the largest action count")

    zeta = math.sqrt(d_or_gain) if variant.endswith("egss") else 2.0 * m - 1.0
    if epsilon > 0:
        kappa = _kappa_for_epsilon(variant, epsilon, b, gamma, d_or_gain, m, zeta)
    one = 1.0 - gamma
    tau = 1.0

    if politex:
        lam = kappa**2 * one**2 / (576.0 * b * b * zeta * zeta)
    else:
        lam = kappa**2 * one**4 / (1024.0 * b * b * zeta * zeta)
    cmax = d_or_gain if kernel else cmax_bound(int(d_or_gain), tau, lam)

    if politex:
        theta = kappa * one / (24.0 * zeta * math.sqrt(cmax))
        horizon = math.ceil(
            (math.log(24.0 * math.sqrt(cmax) * zeta) - math.log(kappa * one**2)) / one
            - 1.0
        )
        k_iterations = math.ceil(
            2.0
            * m
            * math.log(a_max)
            * (4.0 / (kappa**2 * one**4) + 3.0 / (kappa * one**2) + 9.0 / 16.0)
        )
    else:
        theta = kappa * one**2 / (32.0 * zeta * math.sqrt(cmax))
        horizon = math.ceil(
            (math.log(32.0 * math.sqrt(cmax) * zeta) - math.log(kappa * one**3)) / one
            - 1.0
        )
        k_iterations = math.ceil(
            (math.log(1.0 / (kappa * one**2)) + math.log(8.0)) / one + 1.0
        )
    horizon = max(horizon, 1)
    k_iterations = max(k_iterations, 1)
    n_rollouts = max(
        math.ceil(
            (math.log(4.0 * k_iterations * cmax**2) - math.log(delta))
            / (2.0 * theta**2 * one**2)
        ),
        1,
    )

    eta_core = b * math.sqrt(lam * tau) + (
        epsilon + gamma ** (horizon + 1) / one + theta
    ) * math.sqrt(tau * cmax)
    eta = zeta * eta_core + epsilon

    alpha = None
    if politex:
        width = 1.0 / one + 2.0 * eta
        alpha = math.sqrt(2.0 * m * math.log(a_max) / k_iterations) / width

    return TheoremParameters(
        variant=variant,
        kappa=kappa,
        delta=delta,
        b=b,
        gamma=gamma,
        d_or_gain=d_or_gain,
        m=m,
        epsilon=epsilon,
        a_max=a_max,
        zeta=zeta,
        tau=tau,
        lam=lam,
        cmax=cmax,
        theta=theta,
        horizon=horizon,
        k_iterations=k_iterations,
        n_rollouts=n_rollouts,
        eta=eta,
        alpha=alpha,
    )
