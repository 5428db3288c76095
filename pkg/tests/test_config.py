"""Tests for solver configuration loading and validation."""

import os
import sys

import pytest
import yaml

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from sacq.config import LambdaSchedule, SolverConfig, load_config, save_config, thread_count
from sacq.errors import ConfigError
from sacq.strategies import Custom, RandomDynamic, Sequential, StringPlan


class TestSolverConfig:
    def test_defaults(self):
        config = SolverConfig()
        config.check()
        assert config.strategy == "sequential"
        assert config.tol == 1e-6
        assert config.gamma_scale == 0.95
        assert isinstance(config.build_strategy(), Sequential)

    def test_dict_round_trip(self):
        config = SolverConfig(
            strategy="custom",
            schedule=(StringPlan.create([(0, 1, 2)], [1.0]), StringPlan.create([(0,), (1, 2)], [0.5, 0.5])),
            delta=0.2,
            lambda_schedule=LambdaSchedule(mode="adaptive", factor=0.8, floor=0.2, stack_step=1),
            max_iter=50,
            seed=4,
        )
        assert SolverConfig.from_dict(config.to_dict()) == config

    def test_yaml_and_json_files(self, tmp_path):
        config = SolverConfig(strategy="random-dynamic", seed=11, tol=1e-8)
        json_path = str(tmp_path / "c.json")
        save_config(config, json_path)
        assert load_config(json_path) == config

        yaml_path = tmp_path / "c.yaml"
        yaml_path.write_text(yaml.safe_dump(config.to_dict()), encoding="utf-8")
        assert load_config(str(yaml_path)) == config

    def test_empty_yaml_gives_defaults(self, tmp_path):
        path = tmp_path / "c.yml"
        path.write_text("", encoding="utf-8")
        assert load_config(str(path)) == SolverConfig()

    def test_unknown_fields_listed(self):
        with pytest.raises(ConfigError, match="speed"):
            SolverConfig.from_dict({"strategy": "sequential", "speed": 3})
        with pytest.raises(ConfigError, match="slope"):
            SolverConfig.from_dict({"lambda": {"slope": 1.0}})

    def test_bad_values(self):
        for data in (
            {"strategy": "greedy"},
            {"strategy": "custom"},
            {"gamma_scale": 1.0},
            {"tol": 0.0},
            {"max_iter": "many"},
            {"max_iter": 2.5},
            {"x0": "middle"},
            {"sweep": "backward"},
            {"lambda": {"value": 2.5}},
            {"version": "sacq-config/2"},
        ):
            with pytest.raises(ConfigError):
                SolverConfig.from_dict(data)

    def test_malformed_yaml_location(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("strategy: [sequential\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="line"):
            load_config(str(path))

    def test_delta_too_large_for_p(self):
        """delta must stay below 1/p."""
        config = SolverConfig(delta=0.5)
        with pytest.raises(ConfigError):
            config.validate(3)
        config.validate(1)

    def test_q_bar_below_p(self):
        with pytest.raises(ConfigError):
            SolverConfig(q_bar=2).validate(3)

    def test_custom_schedule_checked_against_p(self):
        config = SolverConfig(strategy="custom", schedule=(StringPlan.create([(0, 1)], [1.0]),))
        config.validate(2)
        with pytest.raises(ConfigError):
            config.validate(3)

    def test_default_constraints(self):
        constraints = SolverConfig().validate(4)
        assert constraints.delta == 0.125
        assert constraints.q_bar == 4

    def test_build_strategies(self):
        assert isinstance(SolverConfig(strategy="random-dynamic").build_strategy(), RandomDynamic)
        custom = SolverConfig(strategy="custom", schedule=(StringPlan.create([(0,)], [1.0]),))
        assert isinstance(custom.build_strategy(), Custom)

    def test_initial_point(self):
        assert SolverConfig().initial_point(3).tolist() == [0.0, 0.0, 0.0]
        assert SolverConfig(x0="ones").initial_point(2).tolist() == [1.0, 1.0]
        a = SolverConfig(x0="random", seed=5).initial_point(4)
        b = SolverConfig(x0="random", seed=5).initial_point(4)
        assert a.tolist() == b.tolist()

    def test_with_seed(self):
        config = SolverConfig(seed=1)
        assert config.with_seed(None) is config
        assert config.with_seed(7).seed == 7


class TestThreadCount:
    def test_default(self, monkeypatch):
        monkeypatch.delenv("SACQ_THREADS", raising=False)
        assert thread_count() == 1

    def test_from_environment(self, monkeypatch):
        monkeypatch.setenv("SACQ_THREADS", "6")
        assert thread_count() == 6

    def test_at_least_one(self, monkeypatch):
        monkeypatch.setenv("SACQ_THREADS", "0")
        assert thread_count() == 1

    def test_not_a_number(self, monkeypatch):
        monkeypatch.setenv("SACQ_THREADS", "lots")
        with pytest.raises(ConfigError):
            thread_count()
