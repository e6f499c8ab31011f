"""Kernelized policy evaluation and uncertainty.

Everything is expressed through the Gram matrix of the core set: the ridge
Q-estimate is ``k_C(x)^T (K_C + lam I)^{-1} q`` and the feature norm of a
query point is ``(k(x,x) - k_C(x)^T (K_C + lam I)^{-1} k_C(x)) / lam``. The
factor of ``K_C + lam I`` is grown one bordered row per insertion, so an
insert costs O(t^2) and a query O(t).

Additive kernels (one kernel per agent, summed) make per-agent evaluation
possible: with a shared coefficient vector, each agent's contribution can be
scored and maximized independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .uncertainty import CERTAIN, UNCERTAIN, CheckOutcome


def _value_of(state):
    return getattr(state, "value", state)


class AdditiveKernel:
    """Joint kernel ``k(x, y) = sum_j k_j(s, a_j, s', a'_j)``.

    ``agent_kernels[j]`` is a callable ``(s, a_j, s', a'_j) -> float``.
    """

    def __init__(self, agent_kernels: Sequence[Callable]):
        self.agent_kernels = list(agent_kernels)
        self.m = len(self.agent_kernels)

    def joint(self, x, y) -> float:
        (s1, a1), (s2, a2) = x, y
        s1, s2 = _value_of(s1), _value_of(s2)
        return float(
            sum(
                k(s1, a1[j], s2, a2[j])
                for j, k in enumerate(self.agent_kernels)
            )
        )

    def agent(self, j: int, s1, a1j: int, s2, a2j: int) -> float:
        return float(self.agent_kernels[j](_value_of(s1), a1j, _value_of(s2), a2j))


def linear_additive_kernel(fmap) -> AdditiveKernel:
    """Per-agent inner products of an additive feature map.

    The joint kernel equals the inner product of joint features whenever the
    agent blocks are mutually orthogonal (true for block one-hot layouts),
    which is what makes this the reference oracle for the kernel path.
    """

    def make(j):
        def k(s1, a1, s2, a2):
            return float(fmap.agent_eval(j, s1, a1) @ fmap.agent_eval(j, s2, a2))

        return k

    return AdditiveKernel([make(j) for j in range(fmap.m)])


def squared_exponential_kernel(
    embed: Callable, m: int, length_scales, output_scale: float | None = None
) -> AdditiveKernel:
    """Per-agent squared-exponential kernel over an embedding.

    ``embed(j, state_value, action)`` maps an agent's view to a vector;
    ``length_scales`` is one positive scale per agent. ``output_scale``
    defaults to 1/m so the joint kernel stays bounded by 1 on the diagonal.
    """
    scales = np.broadcast_to(np.asarray(length_scales, float), (m,))
    out = 1.0 / m if output_scale is None else float(output_scale)

    def make(j):
        ls2 = 2.0 * float(scales[j]) ** 2

        def k(s1, a1, s2, a2):
            d = embed(j, s1, a1) - embed(j, s2, a2)
            return out * math.exp(-float(d @ d) / ls2)

        return k

    return AdditiveKernel([make(j) for j in range(m)])


@dataclass
class KernelElement:
    """Core-set tuple in the kernel setting; no explicit feature is stored."""

    state: object
    action: tuple
    q: Optional[float] = None
    uncertainty: Optional[float] = None


@dataclass
class KernelCoreSet:
    """Elements plus the growing factor of ``K_C + lam I``."""

    kernel: AdditiveKernel
    lam: float
    elements: list = field(default_factory=list)
    gram: np.ndarray = None
    chol: np.ndarray = None

    def __post_init__(self):
        if self.gram is None:
            self.gram = np.zeros((0, 0))
        if self.chol is None:
            self.chol = np.zeros((0, 0))

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def version(self) -> int:
        return len(self.elements)

    def add(self, element: KernelElement) -> "KernelCoreSet":
        """Append one element, growing the factor by a bordered row."""
        x = (element.state, element.action)
        t = len(self.elements)
        col = np.array(
            [self.kernel.joint((e.state, e.action), x) for e in self.elements]
        )
        diag = self.kernel.joint(x, x) + self.lam
        if t == 0:
            self.gram = np.array([[self.kernel.joint(x, x)]])
            self.chol = np.array([[math.sqrt(diag)]])
        else:
            y = solve_triangular(self.chol, col, lower=True, check_finite=False)
            rest = diag - float(y @ y)
            if rest <= 0:
                raise ValueError("factor update lost positive definiteness")
            grown = np.zeros((t + 1, t + 1))
            grown[:t, :t] = self.chol
            grown[t, :t] = y
            grown[t, t] = math.sqrt(rest)
            self.chol = grown
            new_gram = np.zeros((t + 1, t + 1))
            new_gram[:t, :t] = self.gram
            new_gram[t, :t] = col
            new_gram[:t, t] = col
            new_gram[t, t] = self.kernel.joint(x, x)
            self.gram = new_gram
        self.elements.append(element)
        return self

    def clear_q(self) -> None:
        for element in self.elements:
            element.q = None

    def k_vector(self, state, action) -> np.ndarray:
        x = (state, tuple(action))
        return np.array(
            [self.kernel.joint((e.state, e.action), x) for e in self.elements]
        )

    def k_vector_agent(self, j: int, state, action_j: int) -> np.ndarray:
        return np.array(
            [
                self.kernel.agent(j, e.state, e.action[j], state, action_j)
                for e in self.elements
            ]
        )

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """(K_C + lam I)^{-1} rhs via the maintained factor."""
        y = solve_triangular(self.chol, rhs, lower=True, check_finite=False)
        return solve_triangular(
            self.chol, y, lower=True, trans="T", check_finite=False
        )

    def q_coefficients(self) -> np.ndarray:
        values = [e.q for e in self.elements]
        if any(v is None for v in values):
            raise ValueError("kernel core set has unset value estimates")
        return self.solve(np.asarray(values, dtype=np.float64))


def kernel_q_eval(kc: KernelCoreSet, state, action) -> float:
    """Ridge Q-estimate at (state, action); zero for an empty core set."""
    if len(kc) == 0:
        return 0.0
    return float(kc.k_vector(state, action) @ kc.q_coefficients())


def kernel_q_eval_agent(
    kc: KernelCoreSet, j: int, state, action_j: int, coef: np.ndarray | None = None
) -> float:
    """Agent j's additive share of the Q-estimate under a shared coefficient."""
    if len(kc) == 0:
        return 0.0
    if coef is None:
        coef = kc.q_coefficients()
    return float(kc.k_vector_agent(j, state, action_j) @ coef)


def kernel_uncertainty(kc: KernelCoreSet, state, action) -> float:
    """Feature norm of the query in the regularized precision, kernel form.

    Returns ``(k(x,x) - k_C^T (K_C + lam I)^{-1} k_C) / lam``, clamped at
    zero against roundoff (the exact value is nonnegative).
    """
    x = (state, tuple(action))
    prior = kc.kernel.joint(x, x)
    if len(kc) == 0:
        return prior / kc.lam
    vec = kc.k_vector(state, action)
    value = (prior - float(vec @ kc.solve(vec))) / kc.lam
    return max(value, 0.0)


def check_kernel_dav(state, kc: KernelCoreSet, tau: float, abar, action_sizes):
    """Single-deviation uncertainty scan with the kernelized feature norm."""
    abar = tuple(abar)
    m = kc.kernel.m
    if len(abar) != m:
        raise ValueError(f"default action {abar!r} must have {m} components")
    seen = set()
    for j in range(m):
        for a in range(action_sizes[j]):
            probe = abar[:j] + (a,) + abar[j + 1 :]
            if probe in seen:
                continue
            seen.add(probe)
            value = kernel_uncertainty(kc, state, probe)
            if value > tau:
                element = KernelElement(
                    state=state, action=probe, q=None, uncertainty=value
                )
                return CheckOutcome(UNCERTAIN, element)
    return CheckOutcome(CERTAIN)


def info_gain(kc: KernelCoreSet, lam: float | None = None) -> float:
    """Total information gain ``log det(I + K_C / lam)``.

    With ``lam`` equal to the core set's own regularizer this is read off
    the maintained factor; other values trigger a fresh factorization.
    """
    t = len(kc)
    if t == 0:
        return 0.0
    if lam is None or lam == kc.lam:
        return 2.0 * float(np.sum(np.log(np.diag(kc.chol)))) - t * math.log(kc.lam)
    chol = np.linalg.cholesky(np.eye(t) + kc.gram / lam)
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def critical_gain_proxy(kc: KernelCoreSet, tau: float) -> float:
    """Certified lower bound on the critical information gain.

    The true critical gain maximizes over all core sets of each size, which
    is not searchable; since ``log(1+tau) * |C| <= Gamma(lam; C)`` holds for
    every set the planner builds, the observed ``Gamma / log(1+tau)`` is a
    valid stand-in when no analytic value is available. Callers should treat
    it as a lower bound, never as the quantity itself.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    return info_gain(kc) / math.log1p(tau)


def kernel_politex_potential(
    kc: KernelCoreSet,
    coefficient_history: Sequence,
    alpha: float,
    state,
    j: int,
    action_j: int,
) -> float:
    """Accumulated log-potential of agent j's action across past iterations.

    ``coefficient_history`` holds one ``(prefix_length, coefficients)`` pair
    per completed iteration: the core set only grows, so the state of the
    set at iteration i is its first ``prefix_length`` elements.
    """
    if alpha == 0.0 or not coefficient_history:
        return 0.0
    total = 0.0
    for prefix, coef in coefficient_history:
        if prefix == 0:
            continue
        vec = np.array(
            [
                kc.kernel.agent(j, e.state, e.action[j], state, action_j)
                for e in kc.elements[:prefix]
            ]
        )
        total += float(vec @ coef)
    return alpha * total
