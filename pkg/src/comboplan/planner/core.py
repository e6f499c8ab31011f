"""Confident Monte-Carlo policy iteration with restart-on-uncertainty.

One control flow drives four algorithm variants: LSPI or Politex policy
improvement, each over either explicit features or an additive kernel. The
uncertainty check runs at every intermediate rollout state; a flagged
state-action tuple is added to the core set and either restarts policy
iteration from scratch (reset mode, the analyzed form) or just retries the
interrupted rollout (no-reset mode, the experiment default).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..coreset import CoreElement, CoreSet, cmax_bound
from ..features import AdditiveGreedyOracle, greedy_additive
from ..kernel import (
    KernelCoreSet,
    KernelElement,
    check_kernel_dav,
    info_gain,
    kernel_politex_potential,
)
from ..rng import stream
from ..uncertainty import check_dav, check_egss, check_naive
from .fast import FastExecutor

ALGORITHMS = ("lspi", "politex")
CHECKS = ("naive", "egss", "dav", "kernel-dav")


@dataclass
class PlannerConfig:
    """Run parameters; defaults match the grid experiment."""

    algorithm: str = "lspi"
    check: str = "dav"
    k_iterations: int = 50
    n_rollouts: int = 50
    horizon: int = 15
    tau: float = 1.0
    lam: float = 1e-5
    gamma: float = 0.8
    alpha: float = 1.0
    abar: Optional[tuple] = None  # default action vector; all zeros if None
    seed: int = 0
    reset: bool = False
    engine: str = "auto"  # auto | fast | reference
    kernel: object = None  # AdditiveKernel for the kernel-dav check

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.check not in CHECKS:
            raise ValueError(f"unknown check {self.check!r}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if min(self.k_iterations, self.n_rollouts, self.horizon) < 1:
            raise ValueError("K, n and H must all be >= 1")
        if self.tau <= 0 or self.lam <= 0:
            raise ValueError("tau and lambda must be positive")
        if self.engine not in ("auto", "fast", "reference"):
            raise ValueError(f"unknown engine {self.engine!r}")


@dataclass
class PolicySnapshot:
    """Frozen policy data.

    * ``lspi``: ``weights`` is a single vector, or None for the uniform
      initial policy.
    * ``politex``: ``weights`` is the list of fitted vectors; the policy is
      the per-agent softmax of their accumulated action scores, and the
      planner's returned snapshot doubles as a uniform mixture over the
      prefixes of that list (component j uses ``weights[:j]``).
    * kernel variants store ``(prefix_length, coefficient)`` pairs instead
      of weight vectors.
    """

    kind: str
    weights: object = None
    alpha: Optional[float] = None
    context: object = None  # kernel core set for kernel policy kinds

    def mixture_size(self) -> int:
        if not self.kind.endswith("politex"):
            raise ValueError("only politex snapshots are mixtures")
        return len(self.weights) + 1

    def component(self, j: int) -> "PolicySnapshot":
        if not 0 <= j < self.mixture_size():
            raise ValueError(f"mixture component {j} out of range")
        return PolicySnapshot(
            kind=self.kind,
            weights=self.weights[:j],
            alpha=self.alpha,
            context=self.context,
        )

    def draw_component(self, rng) -> int:
        return int(rng.integers(0, self.mixture_size()))


@dataclass
class RunStats:
    """Counters and per-run diagnostics, JSON-serializable."""

    queries: int = 0
    restarts: int = 0
    insertions: int = 0
    coreset_sizes: list = field(default_factory=list)
    iteration_records: list = field(default_factory=list)
    insertion_log: list = field(default_factory=list)
    weight_history: list = field(default_factory=list)
    budget: int = 0
    engine: str = "reference"

    def to_json(self) -> str:
        return json.dumps(
            {
                "queries": self.queries,
                "restarts": self.restarts,
                "insertions": self.insertions,
                "coreset_sizes": self.coreset_sizes,
                "iterations": [
                    {"k": k, "coreset_size": c, "queries": q}
                    for (k, c, q) in self.iteration_records
                ],
                "insertion_log": self.insertion_log,
                "budget": self.budget,
                "engine": self.engine,
            }
        )


def query_budget(cmax, k_iterations: int, n_rollouts: int, horizon: int) -> int:
    """Worst-case simulator queries: ceil(cmax)^2 * K * n * H."""
    if min(k_iterations, n_rollouts, horizon) < 1 or cmax < 1:
        raise ValueError("budget factors must be positive")
    return int(math.ceil(cmax)) ** 2 * k_iterations * n_rollouts * horizon


def politex_agent_probs(fmap, weights, alpha, state, agent: int) -> np.ndarray:
    """Softmax over one agent's actions with accumulated scores as logits.

    Logits are ``alpha * sum_k w_k . phi_i(s, a)``; the running max is
    subtracted before exponentiation. An empty weight list yields the
    uniform distribution.
    """
    size = fmap.action_sizes[agent]
    if not weights:
        return np.full(size, 1.0 / size)
    w_sum = np.sum(weights, axis=0)
    logits = alpha * np.array(
        [float(w_sum @ fmap.phi_agent(agent, state, a)) for a in range(size)]
    )
    logits -= logits.max()
    probs = np.exp(logits)
    return probs / probs.sum()


def politex_sample(fmap, weights, alpha, state, rng) -> tuple:
    """Draw a joint action from the factorized softmax policy.

    Components are sampled independently per agent; the induced joint law
    equals the softmax over joint actions exactly because the joint score
    decomposes into per-agent sums.
    """
    action = []
    for agent in range(fmap.m):
        probs = politex_agent_probs(fmap, weights, alpha, state, agent)
        action.append(int(rng.choice(len(probs), p=probs)))
    return tuple(action)


def _uniform_action(fmap, rng) -> tuple:
    return tuple(int(rng.integers(0, size)) for size in fmap.action_sizes)


def sample_action(fmap, policy: PolicySnapshot, state, rng, kernel_core=None) -> tuple:
    """Draw one action from a rollout policy snapshot."""
    if policy.kind == "lspi":
        if policy.weights is None:
            return _uniform_action(fmap, rng)
        return greedy_additive(fmap, policy.weights, state)
    if policy.kind == "politex":
        return politex_sample(fmap, policy.weights, policy.alpha, state, rng)
    if policy.kind == "kernel-lspi":
        if policy.weights is None:
            return _uniform_action(fmap, rng)
        prefix, coef = policy.weights
        out = []
        for agent, size in enumerate(fmap.action_sizes):
            scores = [
                _kernel_agent_score(kernel_core, prefix, coef, agent, state, a)
                for a in range(size)
            ]
            out.append(int(np.argmax(scores)))
        return tuple(out)
    if policy.kind == "kernel-politex":
        out = []
        for agent, size in enumerate(fmap.action_sizes):
            logits = np.array(
                [
                    kernel_politex_potential(
                        kernel_core, policy.weights, policy.alpha, state, agent, a
                    )
                    for a in range(size)
                ]
            )
            logits -= logits.max()
            probs = np.exp(logits)
            probs /= probs.sum()
            out.append(int(rng.choice(size, p=probs)))
        return tuple(out)
    raise ValueError(f"unknown policy kind {policy.kind!r}")


def _kernel_agent_score(kc, prefix, coef, agent, state, action_j):
    vec = np.array(
        [
            kc.kernel.agent(agent, e.state, e.action[agent], state, action_j)
            for e in kc.elements[:prefix]
        ]
    )
    return float(vec @ coef) if prefix else 0.0


def rollout(
    n: int,
    horizon: int,
    policy: PolicySnapshot,
    element,
    core,
    tau: float,
    check,
    *,
    env,
    fmap,
    gamma: float,
    rng,
    kernel_core=None,
    query_sink=None,
):
    """Average of n truncated discounted returns, or the first uncertain
    tuple found.

    The element's stored action is used at t=0; later actions come from the
    policy. Every intermediate state (t = 1..H) is checked before its action
    is sampled; on an uncertain outcome no further queries are issued in
    this call.
    """
    total = 0.0
    queries = 0
    try:
        for _ in range(n):
            transition = env.step(element.state, element.action)
            queries += 1
            ret = transition.reward
            state = transition.next
            discount = 1.0
            for _t in range(1, horizon + 1):
                outcome = check(state)
                if outcome.is_uncertain:
                    return "uncertain", outcome.result
                action = sample_action(fmap, policy, state, rng, kernel_core)
                transition = env.step(state, action)
                queries += 1
                discount *= gamma
                ret += discount * transition.reward
                state = transition.next
            total += ret
    finally:
        if query_sink is not None:
            query_sink(queries)
    return "done", total / n


class GenericExecutor:
    """Reference rollout executor over the public simulator contract."""

    def __init__(self, env, fmap, config: PlannerConfig, core, kernel_core, rng_policy):
        self.env = env
        self.fmap = fmap
        self.config = config
        self.core = core
        self.kernel_core = kernel_core
        self.rng_policy = rng_policy
        self.queries = 0
        self._cache = {}
        self._oracle = AdditiveGreedyOracle(fmap) if config.check == "egss" else None

    def _count(self, q):
        self.queries += q

    def check(self, handle):
        target = self.kernel_core if self.config.check == "kernel-dav" else self.core
        key = (target.version, handle.id)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        cfg = self.config
        abar = cfg.abar or (0,) * self.fmap.m
        if cfg.check == "naive":
            out = check_naive(handle, self.core, cfg.tau, self.fmap)
        elif cfg.check == "egss":
            out = check_egss(handle, self.core, cfg.tau, self._oracle)
        elif cfg.check == "dav":
            out = check_dav(handle, self.core, cfg.tau, abar, self.fmap)
        else:
            out = check_kernel_dav(
                handle, self.kernel_core, cfg.tau, abar, self.fmap.action_sizes
            )
        self._cache[key] = out
        return out

    def run_rollout(self, policy, element):
        return rollout(
            self.config.n_rollouts,
            self.config.horizon,
            policy,
            element,
            self.core,
            self.config.tau,
            self.check,
            env=self.env,
            fmap=self.fmap,
            gamma=self.config.gamma,
            rng=self.rng_policy,
            kernel_core=self.kernel_core,
            query_sink=self._count,
        )

    def on_insert(self, element):
        pass  # caches key on the core set version, which just changed


class _FiniteModel:
    """Explicit-feature fitting and policies."""

    def __init__(self, fmap, config):
        self.fmap = fmap
        self.config = config

    def seed_core(self, rho, abar):
        return CoreSet.seed(rho, abar, self.fmap, lam=self.config.lam, tau=self.config.tau)

    def admit(self, core, result) -> CoreElement:
        core.add(result)
        return result

    def fit(self, core):
        return core.solve_weights()

    def rollout_policy(self, history) -> PolicySnapshot:
        if self.config.algorithm == "lspi":
            w = history[-1] if history else None
            return PolicySnapshot(kind="lspi", weights=w)
        return PolicySnapshot(
            kind="politex", weights=list(history), alpha=self.config.alpha
        )

    def final_snapshot(self, history) -> PolicySnapshot:
        k = self.config.k_iterations
        if self.config.algorithm == "lspi":
            w = history[k - 2] if k >= 2 else None
            return PolicySnapshot(kind="lspi", weights=w)
        return PolicySnapshot(
            kind="politex", weights=list(history[: k - 1]), alpha=self.config.alpha
        )

    def info_gain(self, core) -> float:
        return core.info_gain()


class _KernelModel:
    """Kernel-trick fitting; policies act through per-agent kernel scores."""

    def __init__(self, fmap, config):
        if config.kernel is None:
            raise ValueError("kernel-dav planning needs config.kernel set")
        if not hasattr(config.kernel, "agent"):
            raise ValueError("kernel planning requires an additive kernel")
        self.fmap = fmap
        self.config = config

    def seed_core(self, rho, abar):
        kc = KernelCoreSet(kernel=self.config.kernel, lam=self.config.lam)
        kc.add(KernelElement(state=rho, action=tuple(abar)))
        self._core = kc
        return kc

    def admit(self, core, result) -> KernelElement:
        element = KernelElement(
            state=result.state, action=result.action, uncertainty=result.uncertainty
        )
        core.add(element)
        return element

    def fit(self, core):
        return (len(core), core.q_coefficients())

    def rollout_policy(self, history) -> PolicySnapshot:
        if self.config.algorithm == "lspi":
            data = history[-1] if history else None
            return PolicySnapshot(kind="kernel-lspi", weights=data)
        return PolicySnapshot(
            kind="kernel-politex", weights=list(history), alpha=self.config.alpha
        )

    def final_snapshot(self, history) -> PolicySnapshot:
        k = self.config.k_iterations
        if self.config.algorithm == "lspi":
            data = history[k - 2] if k >= 2 else None
            return PolicySnapshot(kind="kernel-lspi", weights=data, context=self._core)
        return PolicySnapshot(
            kind="kernel-politex",
            weights=list(history[: k - 1]),
            alpha=self.config.alpha,
            context=self._core,
        )

    def info_gain(self, core) -> float:
        return info_gain(core)


def plan(env, fmap, config: PlannerConfig, rho=None):
    """Run one full planning session; returns (snapshot, stats).

    ``rho`` defaults to ``env.reset()``. LSPI returns the greedy policy of
    iteration K-1 (for K=1 that is the uniform initial policy); Politex
    returns the uniform mixture over the iterates 0..K-1. Restart counts,
    insertion counts and the sequence of fitted weights land in the stats.
    """
    if rho is None:
        rho = env.reset()
    abar = tuple(config.abar) if config.abar is not None else (0,) * fmap.m
    kernel_mode = config.check == "kernel-dav"
    model = _KernelModel(fmap, config) if kernel_mode else _FiniteModel(fmap, config)
    core = model.seed_core(rho, abar)
    kernel_core = core if kernel_mode else None
    finite_core = None if kernel_mode else core

    rng_policy = stream(config.seed, "policy")
    stats = RunStats(engine="reference")
    dim_for_bound = fmap.dim
    cap = cmax_bound(dim_for_bound, config.tau, config.lam)
    stats.budget = query_budget(
        cap, config.k_iterations, config.n_rollouts, config.horizon
    )

    executor = None
    if kernel_mode and config.engine == "fast":
        raise ValueError("fast engine does not support kernel planning")
    if not kernel_mode and config.engine in ("auto", "fast"):
        executor = FastExecutor.build(env, fmap, config, core, rng_policy)
        if executor is None and config.engine == "fast":
            raise ValueError("fast engine requested but unavailable for this setup")
    if executor is None:
        executor = GenericExecutor(env, fmap, config, finite_core, kernel_core, rng_policy)
    stats.engine = getattr(executor, "name", "reference")

    def admit(result):
        element = model.admit(core, result)
        stats.insertions += 1
        stats.insertion_log.append(
            (
                len(core),
                float(model.info_gain(core)),
                None if element.uncertainty is None else float(element.uncertainty),
            )
        )
        executor.on_insert(element)
        if len(core) > math.ceil(cap) + 1:
            raise RuntimeError(
                "core set exceeded its theoretical size bound; invariant bug"
            )

    # alternate: seed the core set, then add uncertain tuples at the start
    # state until the check passes there
    outcome = executor.check(rho)
    while outcome.is_uncertain:
        admit(outcome.result)
        outcome = executor.check(rho)

    k_final = 0
    history = []
    while True:
        for element in core.elements:
            element.q = None
        history = []
        stats.iteration_records = []
        restarted = False
        for k in range(1, config.k_iterations + 1):
            policy = model.rollout_policy(history)
            idx = 0
            while idx < len(core.elements):
                element = core.elements[idx]
                status, result = executor.run_rollout(policy, element)
                if status == "done":
                    element.q = result
                    idx += 1
                    continue
                admit(result)
                if config.reset:
                    stats.restarts += 1
                    stats.coreset_sizes.append(len(core))
                    restarted = True
                    break
                # no-reset mode keeps all estimates and retries this element
            if restarted:
                break
            history.append(model.fit(core))
            k_final = k
            stats.iteration_records.append((k, len(core), executor.queries))
        if not restarted:
            break
        if stats.restarts > math.ceil(cap) + 1:
            raise RuntimeError("restart count exceeded the core set bound")

    stats.queries = executor.queries
    stats.coreset_sizes.append(len(core))
    stats.weight_history = history
    if stats.queries > stats.budget:
        raise RuntimeError("query budget exceeded; invariant bug")
    assert k_final == config.k_iterations
    return model.final_snapshot(history), stats


def lspi_plan(rho, env, fmap, config: PlannerConfig):
    """Greedy policy iteration; returns the policy of iteration K-1."""
    if config.algorithm != "lspi":
        raise ValueError("config.algorithm must be 'lspi'")
    return plan(env, fmap, config, rho=rho)


def politex_plan(rho, env, fmap, config: PlannerConfig):
    """Softmax policy iteration; returns the uniform mixture of iterates."""
    if config.algorithm != "politex":
        raise ValueError("config.algorithm must be 'politex'")
    return plan(env, fmap, config, rho=rho)
