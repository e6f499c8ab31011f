"""Experiment runner: planner matrices over (variant, n, seed) cells.

Input is a JSON config file (flags override single keys); output is a CSV of
per-iteration learning curves plus a JSON summary with per-cell means and
standard deviations across seeds. Policy values are computed on a frozen
snapshot after each outer iteration, reporting the value of the policy the
run would return if stopped there.

CSV schema (fixed):
    seed,variant,check,n,iteration,restarts,coreset_size,queries,policy_value

Exit codes: 0 success, 1 config error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from multiprocessing import Pool, cpu_count

import numpy as np

from .mdp import (
    EnvironmentSpec,
    JointModel,
    ProductModel,
    evaluate_factorized_policy,
    evaluate_joint_policy,
    make_env,
    make_feature_map,
)
from .mdp.dp import JOINT_STATE_LIMIT
from .planner import (
    PlannerConfig,
    PolicySnapshot,
    plan,
    politex_agent_probs,
    sample_action,
)
from .rng import stream

CSV_HEADER = "seed,variant,check,n,iteration,restarts,coreset_size,queries,policy_value"

DEFAULT_VARIANTS = [
    "lspi:naive",
    "lspi:egss",
    "lspi:dav",
    "politex:naive",
    "politex:egss",
    "politex:dav",
]


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Full experiment description; defaults reproduce the grid study."""

    env_kind: str = "grid4"
    env_params: dict = field(default_factory=dict)
    variants: list = field(default_factory=lambda: list(DEFAULT_VARIANTS))
    n_values: list = field(default_factory=lambda: [10, 50])
    iterations: int = 50
    horizon: int = 15
    gamma: float = 0.8
    lam: float = 1e-5
    tau: float = 1.0
    alpha: float = 1.0
    seeds: list = field(default_factory=lambda: list(range(25)))
    eval_mode: str = "dp-exact"
    eval_episodes: int = 200
    eval_horizon: int = 50
    out_csv: str = "results.csv"
    out_summary: str = "summary.json"
    engine: str = "auto"
    reset: bool = False
    workers: int | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        cfg = cls()
        known = set(cfg.__dataclass_fields__)
        for key, value in data.items():
            if key == "env":
                cfg.env_kind = value.get("kind", cfg.env_kind)
                cfg.env_params = dict(value.get("params", {}))
            elif key == "eval":
                cfg.eval_mode = value.get("mode", cfg.eval_mode)
                cfg.eval_episodes = int(value.get("episodes", cfg.eval_episodes))
                cfg.eval_horizon = int(value.get("horizon", cfg.eval_horizon))
            elif key == "lambda":
                cfg.lam = float(value)
            elif key == "seeds":
                cfg.seeds = list(range(value)) if isinstance(value, int) else list(value)
            elif key in known:
                setattr(cfg, key, value)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        cfg.validate()
        return cfg

    def validate(self) -> None:
        for variant in self.variants:
            algo, _, check = variant.partition(":")
            if algo not in ("lspi", "politex") or check not in (
                "naive",
                "egss",
                "dav",
                "kernel-dav",
            ):
                raise ConfigError(f"bad variant {variant!r}; expected algo:check")
        if self.eval_mode not in ("dp-exact", "monte-carlo"):
            raise ConfigError(f"unknown eval mode {self.eval_mode!r}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if not self.n_values:
            raise ConfigError("at least one rollout count is required")

    def cells(self):
        for variant in self.variants:
            algo, _, check = variant.partition(":")
            for n in self.n_values:
                for seed in self.seeds:
                    yield (algo, check, int(n), int(seed))


# -- policy values -----------------------------------------------------------


def iteration_snapshot(
    algorithm: str, history: list, k: int, alpha: float, kernel_core=None
):
    """Policy the run would return after k completed iterations."""
    prefix = "kernel-" if kernel_core is not None else ""
    if algorithm == "lspi":
        weights = history[k - 2] if k >= 2 else None
        return PolicySnapshot(
            kind=prefix + "lspi", weights=weights, context=kernel_core
        )
    return PolicySnapshot(
        kind=prefix + "politex",
        weights=list(history[: k - 1]),
        alpha=alpha,
        context=kernel_core,
    )


def _factor_probs(fmap, component: PolicySnapshot, model: ProductModel):
    """Per-agent action probabilities of a factorized policy component."""
    layout = fmap.layout
    if layout is None:
        raise ValueError("factorized evaluation needs a block one-hot layout")
    probs = []
    for agent, factor in enumerate(model.factors):
        n_s, n_a = factor.p.shape[0], factor.p.shape[1]
        off = layout.offsets[agent]
        if component.kind == "lspi":
            if component.weights is None:
                p = np.full((n_s, n_a), 1.0 / n_a)
            else:
                block = np.asarray(component.weights)[off : off + n_s * n_a]
                p = np.zeros((n_s, n_a))
                p[np.arange(n_s), block.reshape(n_s, n_a).argmax(axis=1)] = 1.0
        elif component.kind == "politex":
            if not component.weights:
                p = np.full((n_s, n_a), 1.0 / n_a)
            else:
                w_sum = np.sum(component.weights, axis=0)
                logits = component.alpha * layout.scale * w_sum[
                    off : off + n_s * n_a
                ].reshape(n_s, n_a)
                logits = logits - logits.max(axis=1, keepdims=True)
                p = np.exp(logits)
                p /= p.sum(axis=1, keepdims=True)
        else:
            raise ValueError(f"cannot factorize policy kind {component.kind!r}")
        probs.append(p)
    return probs


def _agent_action_probs(fmap, component: PolicySnapshot, state, agent: int):
    size = fmap.action_sizes[agent]
    if component.kind == "lspi":
        p = np.zeros(size)
        if component.weights is None:
            p[:] = 1.0 / size
        else:
            scores = [
                float(np.asarray(component.weights) @ fmap.phi_agent(agent, state, a))
                for a in range(size)
            ]
            p[int(np.argmax(scores))] = 1.0
        return p
    if component.kind == "politex":
        return politex_agent_probs(
            fmap, component.weights, component.alpha, state, agent
        )
    if component.kind in ("kernel-lspi", "kernel-politex"):
        from .kernel import kernel_politex_potential

        kc = component.context
        if kc is None:
            raise ValueError("kernel snapshot lacks its core set context")
        if component.kind == "kernel-lspi":
            p = np.zeros(size)
            if component.weights is None:
                p[:] = 1.0 / size
            else:
                prefix, coef = component.weights
                scores = [
                    float(
                        np.array(
                            [
                                kc.kernel.agent(agent, e.state, e.action[agent], state, a)
                                for e in kc.elements[:prefix]
                            ]
                        )
                        @ coef
                    )
                    for a in range(size)
                ]
                p[int(np.argmax(scores))] = 1.0
            return p
        logits = np.array(
            [
                kernel_politex_potential(
                    kc, component.weights, component.alpha, state, agent, a
                )
                for a in range(size)
            ]
        )
        logits -= logits.max()
        p = np.exp(logits)
        return p / p.sum()
    raise ValueError(f"unknown policy kind {component.kind!r}")


def _joint_probs(fmap, component: PolicySnapshot, model: JointModel):
    probs = np.zeros((len(model.states), len(model.actions)))
    for s_idx, state in enumerate(model.states):
        per_agent = [
            _agent_action_probs(fmap, component, state, agent)
            for agent in range(fmap.m)
        ]
        for a_idx, action in enumerate(model.actions):
            p = 1.0
            for agent, a in enumerate(action):
                p *= per_agent[agent][a]
            probs[s_idx, a_idx] = p
    return probs


def _component_value(fmap, component, model, gamma):
    if isinstance(model, ProductModel):
        return evaluate_factorized_policy(model, _factor_probs(fmap, component, model), gamma)
    return evaluate_joint_policy(model, _joint_probs(fmap, component, model), gamma)


def _snapshot_value_exact(fmap, snapshot: PolicySnapshot, model, gamma):
    if snapshot.kind.endswith("politex"):
        values = [
            _component_value(fmap, snapshot.component(j), model, gamma)
            for j in range(snapshot.mixture_size())
        ]
        return float(np.mean(values))
    return _component_value(fmap, snapshot, model, gamma)


def evaluate_policy(policy: PolicySnapshot, spec: EnvironmentSpec, gamma: float, mode) -> float:
    """Value of a policy snapshot at the environment's start state.

    ``mode`` is either ``{"kind": "dp-exact"}`` (exact policy evaluation on
    the enumerated model) or ``{"kind": "monte-carlo", "episodes": ...,
    "horizon": ...}`` (averaged truncated returns on a simulator driven by
    the evaluation stream).
    """
    env = make_env(spec)
    fmap = make_feature_map(env)
    kind = mode["kind"] if isinstance(mode, dict) else str(mode)
    if kind == "dp-exact":
        model = env.dp_model()
        if model is None:
            raise ValueError(f"{spec.kind} has no enumerable model for dp-exact")
        if isinstance(model, ProductModel) and model.joint_states > JOINT_STATE_LIMIT:
            raise ValueError(
                f"joint state space of size {model.joint_states} is too large "
                "for dp-exact evaluation"
            )
        return _snapshot_value_exact(fmap, policy, model, gamma)
    if kind != "monte-carlo":
        raise ValueError(f"unknown evaluation mode {kind!r}")
    episodes = int(mode.get("episodes", 200))
    horizon = int(mode.get("horizon", 50))
    env.rng = stream(spec.seed, "eval")
    rng = stream(spec.seed, "eval")
    mix_rng = stream(spec.seed, "mixture")
    total = 0.0
    for _ in range(episodes):
        component = policy
        if policy.kind.endswith("politex"):
            component = policy.component(policy.draw_component(mix_rng))
        handle = env.reset()
        discount, ret = 1.0, 0.0
        for _t in range(horizon):
            action = sample_action(fmap, component, handle, rng, policy.context)
            transition = env.step(handle, action)
            ret += discount * transition.reward
            discount *= gamma
            handle = transition.next
        total += ret
    return total / episodes


# -- experiment matrix --------------------------------------------------------


def _policy_value_curve(
    cfg: ExperimentConfig, fmap, model, algorithm, history, kernel_core=None
):
    """Values of the would-be-returned policy after 1..K iterations."""
    k_total = cfg.iterations
    kind = "kernel-politex" if kernel_core is not None else "politex"
    values = []
    if algorithm == "politex":
        component_values = [
            _component_value(
                fmap,
                PolicySnapshot(
                    kind=kind,
                    weights=history[:j],
                    alpha=cfg.alpha,
                    context=kernel_core,
                ),
                model,
                cfg.gamma,
            )
            for j in range(k_total)
        ]
        running = np.cumsum(component_values)
        for k in range(1, k_total + 1):
            values.append(float(running[k - 1] / k))
    else:
        for k in range(1, k_total + 1):
            snapshot = iteration_snapshot("lspi", history, k, cfg.alpha, kernel_core)
            values.append(_component_value(fmap, snapshot, model, cfg.gamma))
    return values


def _run_cell(payload):
    cfg = ExperimentConfig.from_dict(payload["config"])
    algo, check, n, seed = payload["cell"]
    spec = EnvironmentSpec(cfg.env_kind, dict(cfg.env_params), seed)
    env = make_env(spec)
    fmap = make_feature_map(env)
    kernel = None
    if check == "kernel-dav":
        from .kernel import linear_additive_kernel

        kernel = linear_additive_kernel(fmap)
    planner_cfg = PlannerConfig(
        algorithm=algo,
        check=check,
        k_iterations=cfg.iterations,
        n_rollouts=n,
        horizon=cfg.horizon,
        tau=cfg.tau,
        lam=cfg.lam,
        gamma=cfg.gamma,
        alpha=cfg.alpha,
        seed=seed,
        reset=cfg.reset,
        engine=cfg.engine,
        kernel=kernel,
    )
    snapshot, stats = plan(env, fmap, planner_cfg)
    kernel_core = snapshot.context if check == "kernel-dav" else None

    if cfg.eval_mode == "dp-exact":
        model = env.dp_model()
        if model is None:
            raise RuntimeError(f"{cfg.env_kind} has no enumerable model for dp-exact")
        if kernel_core is not None and isinstance(model, ProductModel):
            raise RuntimeError(
                "dp-exact evaluation of kernel policies needs an explicitly "
                "enumerated environment; use monte-carlo evaluation here"
            )
        values = _policy_value_curve(
            cfg, fmap, model, algo, stats.weight_history, kernel_core
        )
    else:
        mode = {
            "kind": "monte-carlo",
            "episodes": cfg.eval_episodes,
            "horizon": cfg.eval_horizon,
        }
        values = [
            evaluate_policy(
                iteration_snapshot(algo, stats.weight_history, k, cfg.alpha, kernel_core),
                spec,
                cfg.gamma,
                mode,
            )
            for k in range(1, cfg.iterations + 1)
        ]

    rows = []
    for (k, coreset_size, queries), value in zip(stats.iteration_records, values):
        rows.append(
            (
                seed,
                algo,
                check,
                n,
                k,
                stats.restarts,
                coreset_size,
                queries,
                value,
            )
        )
    info_slacks = [
        gain - np.log1p(cfg.tau) * count for count, gain, _ in stats.insertion_log
    ]
    audit = {
        "queries": stats.queries,
        "budget": stats.budget,
        "coreset_size": stats.coreset_sizes[-1],
        "restarts": stats.restarts,
        "insertions": stats.insertions,
        "min_info_gain_slack": float(min(info_slacks)) if info_slacks else None,
        "engine": stats.engine,
    }
    return {
        "cell": payload["cell"],
        "rows": rows,
        "final_value": values[-1],
        "audit": audit,
    }


def run_experiment(cfg: ExperimentConfig) -> int:
    """Run the full cell matrix and write CSV + summary JSON."""
    cells = sorted(cfg.cells())
    payloads = [{"config": _config_dict(cfg), "cell": cell} for cell in cells]
    workers = cfg.workers or max(1, min(cpu_count(), len(payloads)))
    if workers > 1 and len(payloads) > 1:
        with Pool(workers) as pool:
            results = pool.map(_run_cell, payloads)
    else:
        results = [_run_cell(p) for p in payloads]
    results.sort(key=lambda r: r["cell"])

    lines = [CSV_HEADER]
    for result in results:
        for row in result["rows"]:
            lines.append(",".join(repr(x) if isinstance(x, float) else str(x) for x in row))
    with open(cfg.out_csv, "w") as fh:
        fh.write("\n".join(lines) + "\n")

    summary = {"config": _config_dict(cfg), "cells": {}, "audits": {}}
    for result in results:
        algo, check, n, seed = result["cell"]
        summary["audits"][f"{algo}:{check}:n={n}:seed={seed}"] = result["audit"]
    by_group = {}
    for result in results:
        algo, check, n, seed = result["cell"]
        by_group.setdefault((algo, check, n), []).append(result)
    for (algo, check, n), group in sorted(by_group.items()):
        curves = np.array([[row[8] for row in r["rows"]] for r in group])
        finals = np.array([r["final_value"] for r in group])
        summary["cells"][f"{algo}:{check}:n={n}"] = {
            "iterations": list(range(1, curves.shape[1] + 1)),
            "mean": [float(x) for x in curves.mean(axis=0)],
            "std": [float(x) for x in curves.std(axis=0)],
            "final_mean": float(finals.mean()),
            "final_std": float(finals.std()),
            "seeds": [r["cell"][3] for r in group],
        }
    with open(cfg.out_summary, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return 0


def _config_dict(cfg: ExperimentConfig) -> dict:
    data = asdict(cfg)
    return data


# -- command line ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="comboplan",
        description="Run planner experiment matrices over seeds and variants.",
    )
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--env", help="environment kind")
    parser.add_argument("--algo", help="algorithm (lspi or politex)")
    parser.add_argument("--check", help="uncertainty check")
    parser.add_argument("--variants", help="comma list of algo:check pairs")
    parser.add_argument("--n", help="comma list of rollout counts")
    parser.add_argument("--iters", type=int, help="outer iterations K")
    parser.add_argument("--horizon", type=int, help="rollout length H")
    parser.add_argument("--gamma", type=float, help="discount factor")
    parser.add_argument("--lambda", dest="lam", type=float, help="ridge regularizer")
    parser.add_argument("--tau", type=float, help="uncertainty threshold")
    parser.add_argument("--alpha", type=float, help="softmax learning rate")
    parser.add_argument("--seeds", help="seed count or comma list")
    parser.add_argument("--eval", help="dp-exact or monte-carlo")
    parser.add_argument("--out", help="CSV output path")
    parser.add_argument("--summary", help="summary JSON path")
    parser.add_argument("--engine", choices=["auto", "fast", "reference"])
    parser.add_argument("--reset", action="store_true", help="restart on uncertainty")
    parser.add_argument("--workers", type=int, help="worker processes")
    return parser


def config_from_args(args) -> ExperimentConfig:
    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
    cfg = ExperimentConfig.from_dict(data)
    if args.env:
        cfg.env_kind = args.env
    if args.variants:
        cfg.variants = args.variants.split(",")
    elif args.algo or args.check:
        algo = args.algo or "lspi"
        check = args.check or "dav"
        cfg.variants = [f"{algo}:{check}"]
    if args.n:
        cfg.n_values = [int(x) for x in str(args.n).split(",")]
    if args.iters is not None:
        cfg.iterations = args.iters
    if args.horizon is not None:
        cfg.horizon = args.horizon
    if args.gamma is not None:
        cfg.gamma = args.gamma
    if args.lam is not None:
        cfg.lam = args.lam
    if args.tau is not None:
        cfg.tau = args.tau
    if args.alpha is not None:
        cfg.alpha = args.alpha
    if args.seeds is not None:
        text = str(args.seeds)
        cfg.seeds = (
            [int(x) for x in text.split(",")] if "," in text else list(range(int(text)))
        )
    if args.eval:
        cfg.eval_mode = args.eval
    if args.out:
        cfg.out_csv = args.out
    if args.summary:
        cfg.out_summary = args.summary
    if args.engine:
        cfg.engine = args.engine
    if args.reset:
        cfg.reset = True
    if args.workers is not None:
        cfg.workers = args.workers
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ConfigError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        return run_experiment(cfg)
    except Exception as exc:  # pragma: no cover - defensive surface
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
