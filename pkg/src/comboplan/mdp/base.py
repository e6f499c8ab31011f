"""Local-access simulator contract and environment registry.

A simulator hands out opaque state handles and accepts queries only at
handles it previously returned. Internally states are interned by value, so
memory grows with the number of *distinct* states visited, not with the
number of queries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, NamedTuple

from ..rng import stream

ActionVector = tuple  # one integer per agent


class LocalAccessError(RuntimeError):
    """Raised when a query targets a state the simulator never returned."""


@dataclass(frozen=True)
class StateHandle:
    """Opaque token for a previously observed simulator state.

    ``value`` is carried for feature maps and diagnostics; planner code must
    treat it as opaque and only ever pass the handle back to its simulator.
    """

    id: int
    value: Hashable


class Transition(NamedTuple):
    next: StateHandle
    reward: float


@dataclass
class EnvironmentSpec:
    """Declarative environment description, constructible from CLI config.

    kind is one of ``grid4``, ``coordination``, ``product``, ``chain``;
    ``params`` holds per-kind parameters and ``seed`` fixes the transition
    noise stream.
    """

    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0


class LocalAccessSimulator:
    """Base class enforcing the local-access discipline.

    Subclasses implement ``_initial_value`` and ``_transition``; this class
    owns the handle registry, the query counter and the noise stream.
    """

    m: int = 1
    action_sizes: tuple = (1,)

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.rng = stream(seed, "env")
        self.queries = 0
        self._values: list = []
        self._ids: dict = {}

    # -- subclass surface -------------------------------------------------
    def _initial_value(self) -> Hashable:
        raise NotImplementedError

    def _transition(self, value, action: ActionVector):
        """Sample (next_value, reward) for a validated state and action."""
        raise NotImplementedError

    # -- public contract --------------------------------------------------
    def reset(self) -> StateHandle:
        """Handle of the initial state; registers it as queryable."""
        return self.intern(self._initial_value())

    def step(self, handle: StateHandle, action: ActionVector) -> Transition:
        """Sample one transition; only registered handles are accepted."""
        if (
            not isinstance(handle, StateHandle)
            or handle.id >= len(self._values)
            or self._values[handle.id] != handle.value
        ):
            raise LocalAccessError(
                f"state handle {handle!r} was never returned by this simulator"
            )
        self._validate_action(action)
        next_value, reward = self._transition(handle.value, tuple(action))
        self.queries += 1
        return Transition(self.intern(next_value), reward)

    def intern(self, value) -> StateHandle:
        """Canonical handle for a state value observed by the simulator."""
        found = self._ids.get(value)
        if found is None:
            found = len(self._values)
            self._values.append(value)
            self._ids[value] = found
        return StateHandle(found, value)

    def is_registered(self, value) -> bool:
        return value in self._ids

    def _validate_action(self, action) -> None:
        if len(action) != self.m:
            raise ValueError(f"action {action!r} must have {self.m} components")
        for i, (a, size) in enumerate(zip(action, self.action_sizes)):
            if not 0 <= int(a) < size:
                raise ValueError(
                    f"component {i} of action {action!r} outside [0, {size})"
                )

    # -- optional structure hooks ------------------------------------------
    def engine_tables(self):
        """Tables for the compiled rollout engine, or None if unsupported."""
        return None

    def dp_model(self):
        """Enumerable model for DP oracles, or None if unsupported."""
        return None


def make_env(spec: EnvironmentSpec) -> LocalAccessSimulator:
    """Instantiate the environment described by a spec."""
    from .coordination import CoordinationEnv
    from .grid import ChainEnv, Grid4Env, ProductChainEnv

    kinds = {
        "grid4": Grid4Env,
        "coordination": CoordinationEnv,
        "chain": ChainEnv,
        "product": ProductChainEnv,
    }
    if spec.kind not in kinds:
        raise ValueError(f"unknown environment kind {spec.kind!r}")
    return kinds[spec.kind](seed=spec.seed, **spec.params)


def make_feature_map(env: LocalAccessSimulator):
    """Feature map published by an environment."""
    fmap = getattr(env, "feature_map", None)
    if fmap is None:
        raise ValueError(f"{type(env).__name__} does not publish a feature map")
    return fmap()
