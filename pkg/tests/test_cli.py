import hashlib
import json

import numpy as np
import pytest

from comboplan.cli import (
    CSV_HEADER,
    ConfigError,
    ExperimentConfig,
    evaluate_policy,
    main,
    run_experiment,
)
from comboplan.mdp import (
    EnvironmentSpec,
    factor_value_iteration,
    make_env,
    tabular_value_iteration,
)
from comboplan.planner import PolicySnapshot


def tiny_config(tmp_path, **overrides):
    cfg = ExperimentConfig.from_dict(
        {
            "env": {"kind": "grid4", "params": {"m": 2}},
            "variants": ["lspi:dav"],
            "n_values": [10],
            "iterations": 5,
            "horizon": 8,
            "seeds": [0],
            "out_csv": str(tmp_path / "out.csv"),
            "out_summary": str(tmp_path / "summary.json"),
            "workers": 1,
        }
    )
    for key, value in overrides.items():
        setattr(cfg, key, value)
    return cfg


class TestConfig:
    def test_defaults_match_grid_study(self):
        cfg = ExperimentConfig()
        assert cfg.gamma == 0.8
        assert cfg.lam == 1e-5
        assert cfg.horizon == 15
        assert cfg.iterations == 50
        assert cfg.alpha == 1.0
        assert len(cfg.seeds) == 25
        assert cfg.n_values == [10, 50]
        assert len(cfg.variants) == 6
        assert len(list(cfg.cells())) == 6 * 2 * 25

    def test_bad_variant_rejected(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"variants": ["qlearning:dav"]})

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"epsilon": 1})

    def test_seed_count_expansion(self):
        cfg = ExperimentConfig.from_dict({"seeds": 3})
        assert cfg.seeds == [0, 1, 2]


class TestRunExperiment:
    def test_row_count_and_schema(self, tmp_path):
        cfg = tiny_config(tmp_path)
        assert run_experiment(cfg) == 0
        lines = (tmp_path / "out.csv").read_text().strip().split("\n")
        assert lines[0] == CSV_HEADER
        assert len(lines) == 1 + 5  # one row per iteration
        first = lines[1].split(",")
        assert first[:5] == ["0", "lspi", "dav", "10", "1"]
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert "lspi:dav:n=10" in summary["cells"]
        assert len(summary["cells"]["lspi:dav:n=10"]["mean"]) == 5

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = tiny_config(tmp_path, seeds=[0, 1])
        run_experiment(cfg)
        digest1 = hashlib.sha256((tmp_path / "out.csv").read_bytes()).hexdigest()
        run_experiment(cfg)
        digest2 = hashlib.sha256((tmp_path / "out.csv").read_bytes()).hexdigest()
        assert digest1 == digest2

    def test_queries_within_budget_column(self, tmp_path):
        from comboplan.coreset import cmax_bound
        from comboplan.planner import query_budget

        cfg = tiny_config(tmp_path)
        run_experiment(cfg)
        lines = (tmp_path / "out.csv").read_text().strip().split("\n")[1:]
        dim = 2 * 9 * 4
        budget = query_budget(
            cmax_bound(dim, cfg.tau, cfg.lam), cfg.iterations, 10, cfg.horizon
        )
        for line in lines:
            queries = int(line.split(",")[7])
            assert queries <= budget

    def test_main_exit_codes(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["--config", str(bad)]) == 1
        good = tmp_path / "good.json"
        good.write_text(
            json.dumps(
                {
                    "env": {"kind": "grid4", "params": {"m": 2}},
                    "variants": ["lspi:dav"],
                    "n_values": [5],
                    "iterations": 2,
                    "horizon": 5,
                    "seeds": [0],
                    "out_csv": str(tmp_path / "o.csv"),
                    "out_summary": str(tmp_path / "s.json"),
                    "workers": 1,
                }
            )
        )
        assert main(["--config", str(good)]) == 0
        assert main(["--config", str(good), "--algo", "qlearning"]) == 1

    def test_kernel_variant_runs_on_enumerable_env(self, tmp_path):
        cfg = ExperimentConfig.from_dict(
            {
                "env": {"kind": "coordination"},
                "variants": ["lspi:kernel-dav"],
                "n_values": [40],
                "iterations": 3,
                "horizon": 10,
                "gamma": 0.5,
                "seeds": [0],
                "out_csv": str(tmp_path / "k.csv"),
                "out_summary": str(tmp_path / "k.json"),
                "workers": 1,
            }
        )
        assert run_experiment(cfg) == 0
        lines = (tmp_path / "k.csv").read_text().strip().split("\n")
        assert len(lines) == 4
        assert float(lines[-1].split(",")[-1]) == pytest.approx(1.0, abs=0.05)

    def test_flag_overrides(self, tmp_path):
        argv = [
            "--env",
            "grid4",
            "--variants",
            "politex:egss",
            "--n",
            "7",
            "--iters",
            "3",
            "--seeds",
            "2",
            "--gamma",
            "0.7",
        ]
        from comboplan.cli import build_parser, config_from_args

        cfg = config_from_args(build_parser().parse_args(argv))
        assert cfg.variants == ["politex:egss"]
        assert cfg.n_values == [7]
        assert cfg.iterations == 3
        assert cfg.seeds == [0, 1]
        assert cfg.gamma == 0.7


class TestEvaluatePolicy:
    def test_optimal_snapshot_matches_value_iteration(self):
        spec = EnvironmentSpec("grid4", {"m": 2}, seed=0)
        env = make_env(spec)
        vi = tabular_value_iteration(env, gamma=0.8)
        # build a weight vector whose per-agent greedy equals the optimal
        # per-factor policy: entries are the factor Q-values
        model = env.dp_model()
        w = np.zeros(2 * 9 * 4)
        for i, factor in enumerate(model.factors):
            v = factor_value_iteration(factor, gamma=0.8)
            q = factor.r + 0.8 * np.einsum("sat,t->sa", factor.p, v)
            w[i * 36 : (i + 1) * 36] = q.reshape(-1)
        snapshot = PolicySnapshot(kind="lspi", weights=w)
        value = evaluate_policy(snapshot, spec, 0.8, {"kind": "dp-exact"})
        assert value == pytest.approx(vi.v_start, abs=1e-9)

    def test_monte_carlo_agrees_with_dp_on_coordination(self):
        spec = EnvironmentSpec("coordination", {}, seed=0)
        snapshot = PolicySnapshot(kind="politex", weights=[], alpha=1.0)
        exact = evaluate_policy(snapshot, spec, 0.5, {"kind": "dp-exact"})
        sampled = evaluate_policy(
            snapshot,
            spec,
            0.5,
            {"kind": "monte-carlo", "episodes": 3000, "horizon": 40},
        )
        # uniform policy return has std ~0.5 per episode; 3 sigma of the mean
        assert sampled == pytest.approx(exact, abs=3 * 0.5 / np.sqrt(3000))

    def test_dp_exact_rejects_nonenumerable(self):
        spec = EnvironmentSpec("product", {"lengths": (30,) * 5}, seed=0)
        snapshot = PolicySnapshot(kind="lspi", weights=None)
        with pytest.raises(ValueError):
            evaluate_policy(snapshot, spec, 0.5, {"kind": "dp-exact"})
