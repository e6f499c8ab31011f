import numpy as np
import pytest
from scipy import stats as scipy_stats

from comboplan.coreset import CoreSet
from comboplan.features import (
    AdditiveFeatureMap,
    enumerate_joint_actions,
    greedy_additive,
    joint_feature,
)
from comboplan.mdp import (
    CoordinationEnv,
    LocalAccessSimulator,
    evaluate_joint_policy,
    tabular_value_iteration,
)
from comboplan.planner import (
    PlannerConfig,
    PolicySnapshot,
    plan,
    politex_sample,
    query_budget,
    rollout,
    sample_action,
)
from comboplan.rng import stream
from comboplan.uncertainty import CheckOutcome


class SelfLoopEnv(LocalAccessSimulator):
    """One state, one action, reward 1 every step."""

    m = 1
    action_sizes = (1,)

    def _initial_value(self):
        return 0

    def _transition(self, value, action):
        return 0, 1.0


def self_loop_map():
    def agent_eval(i, value, a):
        return np.array([1.0])

    return AdditiveFeatureMap(
        m=1, dim=1, action_sizes=(1,), agent_eval=agent_eval, layout=None
    )


class TwoActionBanditEnv(LocalAccessSimulator):
    """Single state; action k pays reward_table[k]."""

    m = 1

    def __init__(self, rewards, seed=0):
        super().__init__(seed=seed)
        self.rewards = tuple(rewards)
        self.action_sizes = (len(self.rewards),)

    def _initial_value(self):
        return 0

    def _transition(self, value, action):
        return 0, self.rewards[action[0]]


def bandit_map(n_actions):
    def agent_eval(i, value, a):
        phi = np.zeros(n_actions)
        phi[a] = 1.0
        return phi

    return AdditiveFeatureMap(
        m=1, dim=n_actions, action_sizes=(n_actions,), agent_eval=agent_eval,
        layout=None,
    )


def certain_check(_handle):
    return CheckOutcome("certain")


class TestRollout:
    def test_discounted_selfloop_value(self):
        env = SelfLoopEnv()
        fmap = self_loop_map()
        rho = env.reset()
        core = CoreSet.seed(rho, (0,), fmap, lam=1.0, tau=np.inf)
        status, value = rollout(
            1,
            2,
            PolicySnapshot(kind="lspi", weights=None),
            core.elements[0],
            core,
            np.inf,
            certain_check,
            env=env,
            fmap=fmap,
            gamma=0.5,
            rng=stream(0, "policy"),
        )
        assert status == "done"
        assert value == pytest.approx(1.75)

    def test_tiny_tau_flags_at_first_intermediate_state(self):
        env = SelfLoopEnv()
        fmap = self_loop_map()
        rho = env.reset()
        core = CoreSet.seed(rho, (0,), fmap, lam=1e9, tau=1e-12)

        from comboplan.uncertainty import check_naive

        calls = []

        def check(handle):
            calls.append(handle)
            return check_naive(handle, core, 1e-12, fmap)

        status, result = rollout(
            5,
            10,
            PolicySnapshot(kind="lspi", weights=None),
            core.elements[0],
            core,
            1e-12,
            check,
            env=env,
            fmap=fmap,
            gamma=0.5,
            rng=stream(0, "policy"),
        )
        assert status == "uncertain"
        assert len(calls) == 1  # flagged at t=1 of the first rollout
        assert env.queries == 1  # no queries after the flag

    def test_uniform_policy_estimate_matches_dp(self):
        env = CoordinationEnv(seed=5)
        fmap = env.feature_map()
        rho = env.reset()
        core = CoreSet.seed(rho, (0, 0), fmap, lam=1.0, tau=np.inf)
        status, value = rollout(
            10_000,
            30,
            PolicySnapshot(kind="politex", weights=[], alpha=1.0),
            core.elements[0],
            core,
            np.inf,
            certain_check,
            env=env,
            fmap=fmap,
            gamma=0.5,
            rng=stream(5, "policy"),
        )
        # uniform policy: from the start, action (0, .) leads to the loop
        # paying a fair coin each step: Q = 0.5 * V = 0.5 * 1
        assert status == "done"
        assert value == pytest.approx(0.5, abs=0.01)


class TestLspiPlan:
    def test_bandit_recovers_immediate_rewards(self):
        rewards = (0.25, 0.875, 0.5)
        env = TwoActionBanditEnv(rewards, seed=0)
        fmap = bandit_map(3)
        cfg = PlannerConfig(
            algorithm="lspi",
            check="naive",
            k_iterations=2,
            n_rollouts=4,
            horizon=1,
            tau=0.5,
            lam=1e-8,
            gamma=0.0,
            seed=0,
            engine="reference",
        )
        snap, stats = plan(env, fmap, cfg)
        assert np.allclose(snap.weights, rewards, atol=1e-6)
        assert greedy_additive(fmap, snap.weights, 0) == (1,)

    def test_coordination_reaches_optimal_value(self):
        env = CoordinationEnv(seed=11)
        fmap = env.feature_map()
        cfg = PlannerConfig(
            algorithm="lspi",
            check="dav",
            k_iterations=6,
            n_rollouts=400,
            horizon=20,
            tau=1.0,
            lam=1e-5,
            gamma=0.5,
            seed=11,
            engine="reference",
        )
        snap, stats = plan(env, fmap, cfg)
        model = env.dp_model()
        probs = np.zeros((3, 4))
        for s_idx, s in enumerate(model.states):
            a = greedy_additive(fmap, snap.weights, s)
            probs[s_idx, model.actions.index(a)] = 1.0
        value = evaluate_joint_policy(model, probs, gamma=0.5)
        vstar = tabular_value_iteration(env, gamma=0.5).v_start
        assert vstar == pytest.approx(1.0, abs=1e-10)
        assert value == pytest.approx(vstar, abs=0.05)

    def test_returned_policy_is_greedy_in_last_but_one_fit(self):
        env = CoordinationEnv(seed=2)
        fmap = env.feature_map()
        cfg = PlannerConfig(
            algorithm="lspi",
            check="dav",
            k_iterations=4,
            n_rollouts=30,
            horizon=10,
            tau=1.0,
            lam=1e-4,
            gamma=0.5,
            seed=2,
            engine="reference",
        )
        snap, stats = plan(env, fmap, cfg)
        assert np.array_equal(snap.weights, stats.weight_history[-2])
        rng = stream(99, "eval")
        for value in (0, 1, 2):
            for _ in range(35):
                assert sample_action(fmap, snap, value, rng) == greedy_additive(
                    fmap, snap.weights, value
                )

    def test_restart_mode_counts_and_budget(self):
        env = CoordinationEnv(seed=4)
        fmap = env.feature_map()
        cfg = PlannerConfig(
            algorithm="lspi",
            check="naive",
            k_iterations=3,
            n_rollouts=20,
            horizon=10,
            tau=0.8,
            lam=0.01,
            gamma=0.5,
            seed=4,
            reset=True,
            engine="reference",
        )
        snap, stats = plan(env, fmap, cfg)
        assert stats.restarts >= 1  # fresh states get flagged mid-rollout
        assert stats.queries <= stats.budget
        assert stats.insertions == len(stats.insertion_log)
        assert len(stats.iteration_records) == 3  # final pass completes K

    def test_bit_for_bit_determinism(self):
        def run():
            env = CoordinationEnv(seed=21)
            fmap = env.feature_map()
            cfg = PlannerConfig(
                algorithm="politex",
                check="egss",
                k_iterations=4,
                n_rollouts=25,
                horizon=12,
                tau=1.0,
                lam=1e-4,
                gamma=0.5,
                alpha=0.7,
                seed=21,
                engine="reference",
            )
            return plan(env, fmap, cfg)

        s1, st1 = run()
        s2, st2 = run()
        assert len(st1.weight_history) == len(st2.weight_history)
        for a, b in zip(st1.weight_history, st2.weight_history):
            assert np.array_equal(a, b)
        assert st1.queries == st2.queries
        assert st1.coreset_sizes == st2.coreset_sizes


class TestPolitexPlan:
    def test_single_iteration_mixture_is_initial_policy(self):
        env = CoordinationEnv(seed=6)
        fmap = env.feature_map()
        cfg = PlannerConfig(
            algorithm="politex",
            check="dav",
            k_iterations=1,
            n_rollouts=5,
            horizon=5,
            tau=1.0,
            lam=1e-3,
            gamma=0.5,
            seed=6,
            engine="reference",
        )
        snap, _ = plan(env, fmap, cfg)
        assert snap.mixture_size() == 1
        assert snap.component(0).weights == []

    def test_zero_alpha_mixture_is_uniform_policy(self):
        env = CoordinationEnv(seed=7)
        fmap = env.feature_map()
        cfg = PlannerConfig(
            algorithm="politex",
            check="dav",
            k_iterations=5,
            n_rollouts=20,
            horizon=12,
            tau=1.0,
            lam=1e-4,
            gamma=0.5,
            alpha=0.0,
            seed=7,
            engine="reference",
        )
        snap, _ = plan(env, fmap, cfg)
        model = env.dp_model()
        uniform = np.full((3, 4), 0.25)
        expected = evaluate_joint_policy(model, uniform, gamma=0.5)
        for j in range(snap.mixture_size()):
            component = snap.component(j)
            probs = np.zeros((3, 4))
            for s_idx, s in enumerate(model.states):
                for a_idx, a in enumerate(model.actions):
                    p = 1.0
                    from comboplan.planner import politex_agent_probs

                    for agent in range(2):
                        p *= politex_agent_probs(
                            fmap, component.weights, 0.0, s, agent
                        )[a[agent]]
                    probs[s_idx, a_idx] = p
            assert evaluate_joint_policy(model, probs, 0.5) == pytest.approx(expected)

    def test_mixture_selection_is_uniform(self):
        snap = PolicySnapshot(
            kind="politex", weights=[np.zeros(2)] * 9, alpha=1.0
        )
        rng = stream(3, "mixture")
        draws = np.array([snap.draw_component(rng) for _ in range(10_000)])
        counts = np.bincount(draws, minlength=10)
        assert counts.size == 10
        result = scipy_stats.chisquare(counts)
        assert result.pvalue > 0.001


class TestPolitexSampling:
    def test_empty_weights_is_uniform(self):
        fmap = CoordinationEnv().feature_map()
        rng = stream(0, "policy")
        draws = [politex_sample(fmap, [], 1.0, 1, rng) for _ in range(4000)]
        counts = {}
        for a in draws:
            counts[a] = counts.get(a, 0) + 1
        for a in enumerate_joint_actions((2, 2)):
            assert counts[a] / 4000 == pytest.approx(0.25, abs=0.05)

    def test_factorized_matches_joint_softmax(self):
        rng = np.random.default_rng(0)
        table = rng.normal(scale=0.8, size=(1, 2, 3, 4))

        def agent_eval(i, value, a):
            return table[value, i, a]

        fmap = AdditiveFeatureMap(
            m=2, dim=4, action_sizes=(3, 3), agent_eval=agent_eval, layout=None
        )
        weights = [rng.normal(scale=0.5, size=4) for _ in range(3)]
        alpha = 0.9

        joint = np.zeros(9)
        actions = list(enumerate_joint_actions((3, 3)))
        for idx, a in enumerate(actions):
            score = sum(float(w @ joint_feature(fmap, 0, a)) for w in weights)
            joint[idx] = np.exp(alpha * score)
        joint /= joint.sum()

        sampler = stream(12, "policy")
        counts = np.zeros(9)
        n = 100_000
        index = {a: i for i, a in enumerate(actions)}
        for _ in range(n):
            counts[index[politex_sample(fmap, weights, alpha, 0, sampler)]] += 1
        tv = 0.5 * np.abs(counts / n - joint).sum()
        assert tv <= 0.02

    def test_dominant_logit_goes_greedy(self):
        fmap = bandit_map(4)
        w = np.array([0.0, 0.0, 10.0, 0.0])
        rng = stream(1, "policy")
        draws = [politex_sample(fmap, [w], 50.0, 0, rng) for _ in range(3000)]
        frac = sum(a == (2,) for a in draws) / 3000
        assert frac >= 0.999


class TestQueryBudget:
    def test_values(self):
        assert query_budget(1, 1, 1, 1) == 1
        assert query_budget(3, 2, 4, 5) == 360
        assert query_budget(2.2, 2, 4, 5) == 9 * 40

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            query_budget(0, 1, 1, 1)
