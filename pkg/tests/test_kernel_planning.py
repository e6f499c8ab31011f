"""End-to-end runs of the kernelized planner variants."""

import numpy as np
import pytest

from comboplan.cli import evaluate_policy
from comboplan.kernel import linear_additive_kernel, squared_exponential_kernel
from comboplan.mdp import (
    ChainEnv,
    CoordinationEnv,
    EnvironmentSpec,
    tabular_value_iteration,
)
from comboplan.planner import PlannerConfig, PolicySnapshot, plan


class TestKernelLspi:
    def test_linear_kernel_reaches_optimal_on_coordination(self):
        env = CoordinationEnv(seed=13)
        fmap = env.feature_map()
        cfg = PlannerConfig(
            algorithm="lspi",
            check="kernel-dav",
            k_iterations=6,
            n_rollouts=120,
            horizon=20,
            tau=1.0,
            lam=1e-4,
            gamma=0.5,
            seed=13,
            engine="reference",
            kernel=linear_additive_kernel(fmap),
        )
        snap, stats = plan(env, fmap, cfg)
        assert snap.kind == "kernel-lspi"
        assert snap.context is not None
        value = evaluate_policy(
            snap, EnvironmentSpec("coordination", {}, 13), 0.5, {"kind": "dp-exact"}
        )
        vstar = tabular_value_iteration(env, gamma=0.5).v_start
        assert value == pytest.approx(vstar, abs=0.05)
        assert stats.queries <= stats.budget

    def test_se_kernel_plans_on_chain(self):
        env = ChainEnv(length=4, seed=3)
        fmap = env.feature_map()

        def embed(j, value, a):
            return np.array([float(value[j]), float(a)])

        cfg = PlannerConfig(
            algorithm="lspi",
            check="kernel-dav",
            k_iterations=4,
            n_rollouts=60,
            horizon=12,
            tau=0.5,
            lam=1e-3,
            gamma=0.7,
            seed=3,
            engine="reference",
            kernel=squared_exponential_kernel(embed, m=1, length_scales=0.6),
        )
        snap, stats = plan(env, fmap, cfg)
        value = evaluate_policy(
            snap,
            EnvironmentSpec("chain", {"length": 4}, 3),
            0.7,
            {"kind": "monte-carlo", "episodes": 200, "horizon": 30},
        )
        vstar = tabular_value_iteration(env, gamma=0.7).v_start
        # short RKHS length scale separates the four cells; expect near-optimal
        assert value >= 0.8 * vstar


class TestKernelPolitex:
    def test_mixture_improves_over_uniform_on_coordination(self):
        env = CoordinationEnv(seed=17)
        fmap = env.feature_map()
        cfg = PlannerConfig(
            algorithm="politex",
            check="kernel-dav",
            k_iterations=6,
            n_rollouts=80,
            horizon=16,
            tau=1.0,
            lam=1e-3,
            gamma=0.5,
            alpha=2.0,
            seed=17,
            engine="reference",
            kernel=linear_additive_kernel(fmap),
        )
        snap, _ = plan(env, fmap, cfg)
        assert snap.kind == "kernel-politex"
        assert snap.mixture_size() == 6
        spec = EnvironmentSpec("coordination", {}, 17)
        value = evaluate_policy(snap, spec, 0.5, {"kind": "dp-exact"})
        uniform = evaluate_policy(
            PolicySnapshot(kind="politex", weights=[], alpha=1.0),
            spec,
            0.5,
            {"kind": "dp-exact"},
        )
        assert value > uniform + 0.05

    def test_requires_kernel_in_config(self):
        env = CoordinationEnv()
        fmap = env.feature_map()
        cfg = PlannerConfig(
            algorithm="lspi", check="kernel-dav", k_iterations=1, n_rollouts=1,
            horizon=1, gamma=0.5,
        )
        with pytest.raises(ValueError):
            plan(env, fmap, cfg)
