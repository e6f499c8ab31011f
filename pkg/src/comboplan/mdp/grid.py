"""Gridworld and chain environments with per-agent product structure.

Each agent moves on its own small deterministic board; stochasticity enters
only through action noise (the intended action is applied with probability
``p_intended``, otherwise one of the other actions is applied uniformly).
The observed reward is a fixed affine rescaling of the summed per-agent
rewards so that it always lies in [0, 1] while preserving argmaxes.

An agent that enters a terminal cell is frozen there: it no longer moves and
its raw reward is zero from then on. The joint episode has no terminal; the
affine map simply keeps paying each frozen agent its raw-zero share.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..features import AdditiveFeatureMap, tabular_additive_map
from .base import LocalAccessSimulator
from .dp import FactorModel, ProductModel


@dataclass
class EngineTables:
    """Flat tables consumed by the rollout engine.

    Index space is shared with the block one-hot feature layout:
    ``offset[i] + s * n_actions[i] + a`` addresses move, reward and feature
    entries alike. Joint states are coded in mixed radix, agent 0 most
    significant.
    """

    m: int
    n_states: np.ndarray
    n_actions: np.ndarray
    offsets: np.ndarray
    move: np.ndarray
    reward: np.ndarray
    frozen: np.ndarray
    frozen_reward: np.ndarray
    p_intended: float
    feature_scale: float
    start: np.ndarray

    @property
    def joint_size(self) -> int:
        return int(np.prod(self.n_states.astype(np.int64)))

    @property
    def radix(self) -> np.ndarray:
        r = np.ones(self.m, dtype=np.int64)
        for i in range(self.m - 2, -1, -1):
            r[i] = r[i + 1] * self.n_states[i + 1]
        return r

    def encode(self, cells) -> int:
        return int(np.dot(self.radix, np.asarray(cells, dtype=np.int64)))

    def decode(self, code: int) -> tuple:
        out = []
        for i in range(self.m):
            out.append(int(code // self.radix[i]))
            code = code % self.radix[i]
        return tuple(out)


class TabularProductEnv(LocalAccessSimulator):
    """Product of independent per-agent boards with additive rewards.

    Subclasses fill the per-agent tables; this class implements stepping,
    the DP model, the engine tables and the block one-hot feature map.
    """

    reward_shift = 0.0  # transformed reward contribution: (raw + shift) * scale

    def __init__(self, seed: int = 0):
        super().__init__(seed=seed)
        # subclasses must set these before calling _finalize
        self._move: list = []
        self._raw: list = []
        self._frozen: list = []
        self._start: list = []
        self.p_intended = 1.0

    def _finalize(self) -> None:
        self.m = len(self._move)
        self.action_sizes = tuple(mv.shape[1] for mv in self._move)
        self.state_sizes = tuple(mv.shape[0] for mv in self._move)
        self.reward_scale = 1.0 / (self.m * (1.0 + self.reward_shift))

    # -- simulator contract -------------------------------------------------
    def _initial_value(self):
        return tuple(self._start)

    def _transition(self, value, action):
        cells = list(value)
        total = 0.0
        shift, scale = self.reward_shift, self.reward_scale
        for i in range(self.m):
            s = cells[i]
            if self._frozen[i][s]:
                total += shift * scale
                continue
            applied = int(action[i])
            n_act = self.action_sizes[i]
            if self.p_intended < 1.0:
                if self.rng.random() >= self.p_intended:
                    k = int(self.rng.random() * (n_act - 1))
                    applied = k + (k >= applied)
            total += (self._raw[i][s, applied] + shift) * scale
            cells[i] = int(self._move[i][s, applied])
        return tuple(cells), total

    # -- structure hooks -----------------------------------------------------
    def feature_map(self) -> AdditiveFeatureMap:
        return tabular_additive_map(self.state_sizes, self.action_sizes)

    def engine_tables(self) -> EngineTables:
        offsets, flat_move, flat_reward, flat_frozen = [], [], [], []
        acc = 0
        shift, scale = self.reward_shift, self.reward_scale
        for i in range(self.m):
            offsets.append(acc)
            acc += self.state_sizes[i] * self.action_sizes[i]
            flat_move.append(self._move[i].reshape(-1))
            flat_reward.append((self._raw[i].reshape(-1) + shift) * scale)
            flat_frozen.append(self._frozen[i])
        return EngineTables(
            m=self.m,
            n_states=np.asarray(self.state_sizes, dtype=np.int64),
            n_actions=np.asarray(self.action_sizes, dtype=np.int64),
            offsets=np.asarray(offsets, dtype=np.int64),
            move=np.concatenate(flat_move).astype(np.int64),
            reward=np.concatenate(flat_reward).astype(np.float64),
            frozen=np.concatenate(flat_frozen).astype(np.uint8),
            frozen_reward=np.full(self.m, shift * scale, dtype=np.float64),
            p_intended=float(self.p_intended),
            feature_scale=1.0 / np.sqrt(self.m),
            start=np.asarray(self._start, dtype=np.int64),
        )

    def dp_model(self) -> ProductModel:
        factors = []
        shift, scale = self.reward_shift, self.reward_scale
        for i in range(self.m):
            n_s, n_a = self.state_sizes[i], self.action_sizes[i]
            p = np.zeros((n_s, n_a, n_s))
            r = np.zeros((n_s, n_a))
            for s in range(n_s):
                if self._frozen[i][s]:
                    p[s, :, s] = 1.0
                    r[s, :] = shift * scale
                    continue
                for a in range(n_a):
                    for applied in range(n_a):
                        if applied == a:
                            prob = self.p_intended
                        else:
                            prob = (1.0 - self.p_intended) / (n_a - 1)
                        if prob == 0.0:
                            continue
                        p[s, a, self._move[i][s, applied]] += prob
                        r[s, a] += prob * (self._raw[i][s, applied] + shift) * scale
            factors.append(FactorModel(p=p, r=r, start=self._start[i]))
        return ProductModel(factors=factors)


def _grid_tables(size: int, goal: int, trap: int | None):
    """Move and raw reward tables for one agent on a ``size x size`` board.

    Actions 0..3 are up, down, left, right with clamping at the walls.
    Entering the goal pays +1, entering the trap pays -1; both cells freeze
    the agent.
    """
    cells = size * size
    move = np.zeros((cells, 4), dtype=np.int64)
    raw = np.zeros((cells, 4))
    frozen = np.zeros(cells, dtype=bool)
    frozen[goal] = True
    if trap is not None:
        frozen[trap] = True
    deltas = ((-1, 0), (1, 0), (0, -1), (0, 1))
    for cell in range(cells):
        r, c = divmod(cell, size)
        for a, (dr, dc) in enumerate(deltas):
            nr = min(max(r + dr, 0), size - 1)
            nc = min(max(c + dc, 0), size - 1)
            dest = nr * size + nc
            move[cell, a] = cell if frozen[cell] else dest
            if frozen[cell]:
                continue
            if dest == goal:
                raw[cell, a] = 1.0
            elif trap is not None and dest == trap:
                raw[cell, a] = -1.0
    return move, raw, frozen


class Grid4Env(TabularProductEnv):
    """m agents, each on its own 3x3 board with a goal and a trap.

    Defaults: start cell (0,0), goal (2,2) paying +1, trap (1,1) paying -1,
    intended actions applied with probability 0.95. Raw per-agent rewards in
    {-1, 0, 1} are observed as ``sum_i (raw_i + 1) / (2m)``, one global
    number in [0, 1].
    """

    reward_shift = 1.0

    def __init__(
        self,
        m: int = 4,
        size: int = 3,
        start_cell: int = 0,
        goal_cell: int | None = None,
        trap_cell: int | None = None,
        p_intended: float = 0.95,
        seed: int = 0,
    ):
        super().__init__(seed=seed)
        goal = size * size - 1 if goal_cell is None else goal_cell
        trap = (size * size - 1) // 2 if trap_cell is None else trap_cell
        move, raw, frozen = _grid_tables(size, goal, trap)
        self._move = [move] * m
        self._raw = [raw] * m
        self._frozen = [frozen] * m
        self._start = [start_cell] * m
        self.p_intended = float(p_intended)
        self.size = size
        self.goal_cell = goal
        self.trap_cell = trap
        self._finalize()


def _chain_tables(length: int):
    """One agent on a line of ``length`` cells, terminal at the right end."""
    if length < 2:
        raise ValueError("chain length must be >= 2")
    move = np.zeros((length, 2), dtype=np.int64)
    raw = np.zeros((length, 2))
    frozen = np.zeros(length, dtype=bool)
    frozen[length - 1] = True
    for s in range(length):
        if frozen[s]:
            move[s, :] = s
            continue
        move[s, 0] = max(s - 1, 0)
        move[s, 1] = s + 1
        if s + 1 == length - 1:
            raw[s, 1] = 1.0
    return move, raw, frozen


class ChainEnv(TabularProductEnv):
    """Single agent walking a line; +1 for reaching the far end, which absorbs."""

    reward_shift = 0.0

    def __init__(self, length: int = 3, p_intended: float = 1.0, seed: int = 0):
        super().__init__(seed=seed)
        move, raw, frozen = _chain_tables(length)
        self._move = [move]
        self._raw = [raw]
        self._frozen = [frozen]
        self._start = [0]
        self.p_intended = float(p_intended)
        self.length = length
        self._finalize()


class ProductChainEnv(TabularProductEnv):
    """Independent chains driven jointly; observed reward is the mean share."""

    reward_shift = 0.0

    def __init__(self, lengths=(3, 3), p_intended: float = 1.0, seed: int = 0):
        super().__init__(seed=seed)
        self._move, self._raw, self._frozen, self._start = [], [], [], []
        for length in lengths:
            move, raw, frozen = _chain_tables(int(length))
            self._move.append(move)
            self._raw.append(raw)
            self._frozen.append(frozen)
            self._start.append(0)
        self.p_intended = float(p_intended)
        self.lengths = tuple(int(x) for x in lengths)
        self._finalize()
