#!/usr/bin/env python3
"""Benchmark the compiled rollout kernel against its pure-Python twin.

Runs the same small grid planning workload on both backends, checks that
the outputs are bit-for-bit identical, and reports wall-clock times.

Usage: python benchmarks/bench_engine.py [--agents 4] [--iters 10] [--n 50]
"""

import argparse
import time

import numpy as np

import comboplan._engine as engine
import comboplan.planner.fast as fast
from comboplan.mdp import Grid4Env, make_feature_map
from comboplan.planner import PlannerConfig, plan


def run(backend: str, args):
    fast.run_rollouts = engine.get_backend(backend)
    env = Grid4Env(m=args.agents, seed=args.seed)
    fmap = make_feature_map(env)
    cfg = PlannerConfig(
        algorithm=args.algorithm,
        check=args.check,
        k_iterations=args.iters,
        n_rollouts=args.n,
        horizon=args.horizon,
        tau=1.0,
        lam=1e-5,
        gamma=0.8,
        alpha=1.0,
        seed=args.seed,
        engine="fast",
    )
    start = time.perf_counter()
    snapshot, stats = plan(env, fmap, cfg)
    elapsed = time.perf_counter() - start
    return snapshot, stats, elapsed


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--agents", type=int, default=4)
    parser.add_argument("--iters", type=int, default=10)
    parser.add_argument("--n", type=int, default=50)
    parser.add_argument("--horizon", type=int, default=15)
    parser.add_argument("--algorithm", default="lspi")
    parser.add_argument("--check", default="dav")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if not engine.HAVE_COMPILED:
        print("compiled kernel unavailable; run `pip install -e .` first")
        return 1

    _, stats_c, time_c = run("compiled", args)
    _, stats_p, time_p = run("python", args)

    identical = (
        stats_c.queries == stats_p.queries
        and stats_c.coreset_sizes == stats_p.coreset_sizes
        and len(stats_c.weight_history) == len(stats_p.weight_history)
        and all(
            np.array_equal(a, b)
            for a, b in zip(stats_c.weight_history, stats_p.weight_history)
        )
    )
    print(f"workload: {args.algorithm}:{args.check}, m={args.agents}, "
          f"K={args.iters}, n={args.n}, H={args.horizon}")
    print(f"queries per run: {stats_c.queries}")
    print(f"bit-identical outputs: {identical}")
    print(f"compiled: {time_c:8.3f}s")
    print(f"python:   {time_p:8.3f}s")
    print(f"speedup:  {time_p / time_c:8.1f}x")
    return 0 if identical else 2


if __name__ == "__main__":
    raise SystemExit(main())
