"""Fast rollout executor for environments with per-agent table structure.

Works for any environment that publishes engine tables (grids, chains and
their products) with a block one-hot feature layout. Three ingredients make
it fast:

* the rollout inner loop runs in the compiled kernel (or its vectorized
  Python twin) over integer state codes;
* check outcomes are cached per joint state code and invalidated when the
  core set grows, so each distinct state is checked once per core-set
  version;
* quadratic forms of the sparse one-hot probes are read directly off an
  explicitly maintained ``V^{-1}`` (rank-one updated per insertion), which
  turns one probe into a handful of array lookups.

The library surface keeps the factor-based representation; this module's
``V^{-1}`` is an internal acceleration and is cross-checked against the
factor path in the test suite.
"""

from __future__ import annotations

import numpy as np

from .._engine import ACTIVE_BACKEND, GREEDY, SOFTMAX, UNIFORM, run_rollouts
from ..coreset import CoreElement
from ..rng import stream_key
from ..uncertainty import CERTAIN, UNCERTAIN, CheckOutcome

JOINT_STATE_LIMIT = 5_000_000
NAIVE_ACTION_LIMIT = 10**6

UNKNOWN = -1


def fast_path_available(env, fmap, config) -> bool:
    tables = env.engine_tables() if hasattr(env, "engine_tables") else None
    if tables is None or fmap.layout is None:
        return False
    if config.check not in ("naive", "egss", "dav"):
        return False
    if tables.joint_size > JOINT_STATE_LIMIT:
        return False
    if config.check == "naive" and fmap.joint_action_count() > NAIVE_ACTION_LIMIT:
        return False
    if tuple(tables.n_states) != fmap.layout.n_states:
        return False
    if tuple(tables.n_actions) != fmap.layout.n_actions:
        return False
    return True


class FastExecutor:
    name = f"fast-{ACTIVE_BACKEND}"

    @classmethod
    def build(cls, env, fmap, config, core, rng_policy):
        if not fast_path_available(env, fmap, config):
            return None
        return cls(env, fmap, config, core)

    def __init__(self, env, fmap, config, core):
        self.env = env
        self.fmap = fmap
        self.config = config
        self.core = core
        self.tables = env.engine_tables()
        t = self.tables
        self.m = t.m
        self.scale = float(t.feature_scale)
        self.radix = t.radix
        self.aradix = np.ones(self.m, dtype=np.int64)
        for i in range(self.m - 2, -1, -1):
            self.aradix[i] = self.aradix[i + 1] * t.n_actions[i + 1]
        self.state_offsets = np.zeros(self.m, dtype=np.int64)
        acc = 0
        for i in range(self.m):
            self.state_offsets[i] = acc
            acc += int(t.n_states[i])
        self.abar = np.asarray(
            config.abar if config.abar is not None else (0,) * self.m, dtype=np.int64
        )

        whitening = core.precision.whitening()
        self.vinv = whitening @ whitening.T
        self._linv = None

        size = t.joint_size
        self.check_cache = np.full(size, UNKNOWN, dtype=np.int8)
        self.violator_action = np.zeros(size, dtype=np.int64)
        self.violator_quad = np.zeros(size, dtype=np.float64)
        self.registered = np.zeros(size, dtype=np.uint8)
        self._visited_scratch = np.zeros(size, dtype=np.uint8)

        self.key = stream_key(config.seed, "policy")
        self.call_index = 0
        self.queries = 0

        self._policy_ref = object()
        self._policy_kind = UNIFORM
        self._greedy = np.zeros(acc, dtype=np.int64)
        self._cdf = np.zeros(len(t.move), dtype=np.float64)

        if config.check == "dav":
            agents, actions = [], []
            for j in range(self.m):
                for a in range(int(t.n_actions[j])):
                    agents.append(j)
                    actions.append(a)
            self._probe_agent = np.asarray(agents, dtype=np.int64)
            self._probe_action = np.asarray(actions, dtype=np.int64)
            self._fill = self._fill_dav
        elif config.check == "naive":
            self._fill = self._fill_naive
        else:
            self._fill = self._fill_egss

    # -- coding -------------------------------------------------------------
    def encode(self, cells) -> int:
        return int(np.dot(self.radix, np.asarray(cells, dtype=np.int64)))

    def decode(self, code: int) -> np.ndarray:
        out = np.zeros(self.m, dtype=np.int64)
        for i in range(self.m):
            out[i] = code // self.radix[i]
            code = int(code % self.radix[i])
        return out

    def _action_code(self, action) -> int:
        return int(np.dot(self.aradix, np.asarray(action, dtype=np.int64)))

    def _decode_action(self, acode: int) -> tuple:
        out = []
        for i in range(self.m):
            out.append(int(acode // self.aradix[i]))
            acode = int(acode % self.aradix[i])
        return tuple(out)

    # -- check table ---------------------------------------------------------
    def _feature_indices(self, cells) -> np.ndarray:
        t = self.tables
        return t.offsets + cells * t.n_actions

    def _quads_for_supports(self, supports: np.ndarray) -> np.ndarray:
        sub = self.vinv[supports[:, :, None], supports[:, None, :]]
        return sub.sum(axis=(1, 2)) * (self.scale * self.scale)

    def _fill_dav(self, code: int) -> None:
        cells = self.decode(code)
        base = self._feature_indices(cells)
        abar_idx = base + self.abar
        supports = np.repeat(abar_idx[None, :], len(self._probe_agent), axis=0)
        rows = np.arange(len(self._probe_agent))
        supports[rows, self._probe_agent] = (
            base[self._probe_agent] + self._probe_action
        )
        quads = self._quads_for_supports(supports)
        flagged = np.nonzero(quads > self.config.tau)[0]
        if flagged.size:
            p = int(flagged[0])
            action = list(self.abar)
            action[int(self._probe_agent[p])] = int(self._probe_action[p])
            self.check_cache[code] = 1
            self.violator_action[code] = self._action_code(action)
            self.violator_quad[code] = float(quads[p])
        else:
            self.check_cache[code] = 0

    def _fill_naive(self, code: int) -> None:
        cells = self.decode(code)
        base = self._feature_indices(cells)
        t = self.tables
        axes = [base[j] + np.arange(int(t.n_actions[j])) for j in range(self.m)]
        grids = np.meshgrid(*axes, indexing="ij")
        supports = np.stack([g.reshape(-1) for g in grids], axis=1)
        quads = self._quads_for_supports(supports)
        flagged = np.nonzero(quads > self.config.tau)[0]
        if flagged.size:
            p = int(flagged[0])
            self.check_cache[code] = 1
            self.violator_action[code] = p  # row order is the lexicographic code
            self.violator_quad[code] = float(quads[p])
        else:
            self.check_cache[code] = 0

    def _fill_egss(self, code: int) -> None:
        if self._linv is None:
            self._linv = self.core.precision.whitening()
        linv = self._linv
        cells = self.decode(code)
        base = self._feature_indices(cells)
        t = self.tables
        d = linv.shape[0]
        blocks = []
        plus = np.zeros(d)
        minus = np.zeros(d)
        for j in range(self.m):
            block = linv[base[j] + np.arange(int(t.n_actions[j])), :]
            blocks.append(block)
            plus += block.max(axis=0)
            minus += (-block).max(axis=0)
        plus *= self.scale
        minus *= self.scale
        big = 2 * d + 1
        order_plus = np.where(plus * plus > self.config.tau, 2 * np.arange(d), big)
        order_minus = np.where(
            minus * minus > self.config.tau, 2 * np.arange(d) + 1, big
        )
        first = int(min(order_plus.min(), order_minus.min()))
        if first == big:
            self.check_cache[code] = 0
            return
        index, sign = first // 2, (1.0 if first % 2 == 0 else -1.0)
        action = [int(np.argmax(sign * blocks[j][:, index])) for j in range(self.m)]
        support = base + np.asarray(action, dtype=np.int64)
        quad = float(
            self.vinv[support[:, None], support[None, :]].sum()
            * self.scale
            * self.scale
        )
        self.check_cache[code] = 1
        self.violator_action[code] = self._action_code(action)
        self.violator_quad[code] = quad

    def _ensure(self, code: int) -> int:
        if self.check_cache[code] == UNKNOWN:
            self._fill(code)
        return int(self.check_cache[code])

    def _outcome(self, code: int) -> CheckOutcome:
        status = self._ensure(code)
        if status == 0:
            return CheckOutcome(CERTAIN)
        cells = tuple(int(c) for c in self.decode(code))
        action = self._decode_action(int(self.violator_action[code]))
        handle = self.env.intern(cells)
        element = CoreElement(
            state=handle,
            action=action,
            phi=self.fmap.joint(cells, action),
            q=None,
            uncertainty=float(self.violator_quad[code]),
        )
        return CheckOutcome(UNCERTAIN, element)

    def check(self, handle) -> CheckOutcome:
        return self._outcome(self.encode(handle.value))

    # -- planner hooks --------------------------------------------------------
    def on_insert(self, element) -> None:
        u = element.phi
        vu = self.vinv @ u
        self.vinv -= np.outer(vu, vu) / (1.0 + float(u @ vu))
        self.check_cache.fill(UNKNOWN)
        self._linv = None

    def _prepare_policy(self, policy) -> None:
        if policy is self._policy_ref:
            return
        t = self.tables
        if policy.kind != "lspi" and policy.kind != "politex":
            raise ValueError(f"fast engine cannot run policy kind {policy.kind!r}")
        if policy.kind == "lspi":
            if policy.weights is None:
                self._policy_kind = UNIFORM
            else:
                self._policy_kind = GREEDY
                w = np.asarray(policy.weights)
                for j in range(self.m):
                    n_s, n_a = int(t.n_states[j]), int(t.n_actions[j])
                    off = int(t.offsets[j])
                    block = w[off : off + n_s * n_a].reshape(n_s, n_a)
                    start = int(self.state_offsets[j])
                    self._greedy[start : start + n_s] = block.argmax(axis=1)
        else:
            if not policy.weights:
                self._policy_kind = UNIFORM
            else:
                self._policy_kind = SOFTMAX
                w_sum = np.sum(policy.weights, axis=0)
                for j in range(self.m):
                    n_s, n_a = int(t.n_states[j]), int(t.n_actions[j])
                    off = int(t.offsets[j])
                    logits = (
                        policy.alpha
                        * self.scale
                        * w_sum[off : off + n_s * n_a].reshape(n_s, n_a)
                    )
                    logits = logits - logits.max(axis=1, keepdims=True)
                    probs = np.exp(logits)
                    probs /= probs.sum(axis=1, keepdims=True)
                    cdf = np.cumsum(probs, axis=1)
                    cdf[:, -1] = 2.0
                    self._cdf[off : off + n_s * n_a] = cdf.reshape(-1)
        self._policy_ref = policy

    def run_rollout(self, policy, element):
        self._prepare_policy(policy)
        t = self.tables
        start_cells = np.asarray(element.state.value, dtype=np.int64)
        start_action = np.asarray(element.action, dtype=np.int64)
        self._visited_scratch.fill(0)
        status, total, code, queries = run_rollouts(
            self.config.n_rollouts,
            self.config.horizon,
            self.config.gamma,
            self.m,
            t.n_actions,
            t.offsets,
            self.radix,
            self.state_offsets,
            t.move,
            t.reward,
            t.frozen,
            t.frozen_reward,
            t.p_intended,
            start_cells,
            start_action,
            self._policy_kind,
            self._greedy,
            self._cdf,
            self.check_cache,
            self._visited_scratch,
            self.key,
            self.call_index,
            self._fill,
        )
        self.call_index += 1
        self.queries += int(queries)
        self.env.queries += int(queries)
        fresh = np.nonzero(self._visited_scratch & ~self.registered)[0]
        for c in fresh:
            self.env.intern(tuple(int(x) for x in self.decode(int(c))))
        self.registered |= self._visited_scratch
        if status == 1:
            return "uncertain", self._outcome(int(code)).result
        return "done", total / self.config.n_rollouts
