"""Solver configuration: the in-memory form of a config file."""

import json
import os
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np
import yaml

from sacq.errors import ConfigError, PlanValidationError
from sacq.strategies import (
    ALL_STRATEGIES,
    Custom,
    PlanConstraints,
    RandomDynamic,
    StringPlan,
    Strategy,
)

CONFIG_VERSION = "sacq-config/1"
THREADS_ENV = "SACQ_THREADS"

X0_MODES = ("zeros", "ones", "random")
SWEEPS = ("sequential", "simultaneous")
LAMBDA_MODES = ("fixed", "adaptive")


@dataclass(frozen=True)
class LambdaSchedule:
    """Block relaxation parameters and the adaptive rule that moves them.

    In adaptive mode a block whose PVC is violated more often than its
    half-spaces gets lambda multiplied by `factor` (never below `floor`) and
    its stacked-projection count raised by `stack_step` (never above
    `stack_max`).
    """

    mode: str = "fixed"
    value: float = 1.0
    factor: float = 0.9
    floor: float = 0.1
    stack_step: int = 0
    stack_max: int = 8

    @property
    def adaptive(self) -> bool:
        return self.mode == "adaptive"

    def check(self) -> None:
        if self.mode not in LAMBDA_MODES:
            raise ConfigError(f"lambda.mode must be one of {LAMBDA_MODES}, got {self.mode!r}")
        if not (0.0 < self.value < 2.0):
            raise ConfigError(f"lambda.value must lie in (0, 2), got {self.value!r}")
        if not (0.0 < self.factor <= 1.0):
            raise ConfigError(f"lambda.factor must lie in (0, 1], got {self.factor!r}")
        if not (0.0 < self.floor <= self.value):
            raise ConfigError(f"lambda.floor must lie in (0, value], got {self.floor!r}")
        if self.stack_step < 0 or self.stack_max < 1:
            raise ConfigError("lambda.stack_step must be >= 0 and lambda.stack_max >= 1")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "value": self.value,
            "factor": self.factor,
            "floor": self.floor,
            "stack_step": self.stack_step,
            "stack_max": self.stack_max,
        }


@dataclass(frozen=True)
class SolverConfig:
    strategy: str = "sequential"
    schedule: tuple = ()
    delta: Optional[float] = None
    q_bar: Optional[int] = None
    gamma_scale: float = 0.95
    lambda_schedule: LambdaSchedule = field(default_factory=LambdaSchedule)
    stack: int = 1
    sweep: str = "sequential"
    tol: float = 1e-6
    max_iter: int = 10_000
    stall_window: int = 50
    stall_eps: float = 1e-10
    seed: int = 0
    x0: str = "zeros"

    def check(self) -> None:
        """Checks that do not depend on the problem size."""
        if self.strategy not in ALL_STRATEGIES:
            raise ConfigError(
                f"strategy must be one of {sorted(ALL_STRATEGIES)}, got {self.strategy!r}"
            )
        if self.strategy == "custom" and not self.schedule:
            raise ConfigError("strategy 'custom' needs a schedule")
        if not (0.0 < self.gamma_scale < 1.0):
            raise ConfigError(f"gamma_scale must lie in (0, 1), got {self.gamma_scale!r}")
        self.lambda_schedule.check()
        if self.stack < 1:
            raise ConfigError(f"stack must be at least 1, got {self.stack}")
        if self.sweep not in SWEEPS:
            raise ConfigError(f"sweep must be one of {SWEEPS}, got {self.sweep!r}")
        if self.tol <= 0:
            raise ConfigError(f"tol must be positive, got {self.tol!r}")
        if self.max_iter < 0:
            raise ConfigError(f"max_iter must be nonnegative, got {self.max_iter}")
        if self.stall_window < 1 or self.stall_eps < 0:
            raise ConfigError("stall_window must be >= 1 and stall_eps >= 0")
        if self.x0 not in X0_MODES:
            raise ConfigError(f"x0 must be one of {X0_MODES}, got {self.x0!r}")

    def build_strategy(self) -> Strategy:
        if self.strategy == "custom":
            return Custom(self.schedule)
        if self.strategy == "random-dynamic":
            return RandomDynamic(self.seed)
        return ALL_STRATEGIES[self.strategy]()

    def plan_constraints(self, p: int) -> PlanConstraints:
        longest = max((plan.longest for plan in self.schedule), default=0)
        default = PlanConstraints.default(p, longest)
        constraints = PlanConstraints(
            delta=default.delta if self.delta is None else float(self.delta),
            q_bar=default.q_bar if self.q_bar is None else int(self.q_bar),
        )
        constraints.check(p)
        return constraints

    def validate(self, p: int) -> PlanConstraints:
        """Full validation against an operator count; returns the plan constraints."""
        self.check()
        constraints = self.plan_constraints(p)
        strategy = self.build_strategy()
        if isinstance(strategy, Custom):
            strategy.check(p, constraints)
        return constraints

    def initial_point(self, n: int) -> np.ndarray:
        if self.x0 == "ones":
            return np.ones(n)
        if self.x0 == "random":
            return np.random.default_rng(self.seed).random(n)
        return np.zeros(n)

    def with_seed(self, seed: Optional[int]) -> "SolverConfig":
        return self if seed is None else replace(self, seed=int(seed))

    def to_dict(self) -> dict:
        return {
            "version": CONFIG_VERSION,
            "strategy": self.strategy,
            "schedule": [plan.to_dict() for plan in self.schedule],
            "delta": self.delta,
            "q_bar": self.q_bar,
            "gamma_scale": self.gamma_scale,
            "lambda": self.lambda_schedule.to_dict(),
            "stack": self.stack,
            "sweep": self.sweep,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "stall_window": self.stall_window,
            "stall_eps": self.stall_eps,
            "seed": self.seed,
            "x0": self.x0,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SolverConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        data = dict(data)
        version = data.pop("version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ConfigError(f"unsupported config version {version!r}")
        known = {f.name for f in fields(cls)} - {"lambda_schedule"} | {"lambda"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")

        lam = data.pop("lambda", None) or {}
        if not isinstance(lam, dict):
            raise ConfigError("lambda must be a mapping")
        lam_known = {f.name for f in fields(LambdaSchedule)}
        lam_unknown = sorted(set(lam) - lam_known)
        if lam_unknown:
            raise ConfigError(f"unknown lambda fields: {', '.join(lam_unknown)}")

        try:
            schedule = tuple(StringPlan.from_dict(p) for p in data.pop("schedule", None) or ())
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed schedule entry: {exc}") from exc
        except PlanValidationError as exc:
            raise ConfigError(f"schedule: {exc}") from exc

        try:
            config = cls(
                lambda_schedule=LambdaSchedule(**lam),
                schedule=schedule,
                **data,
            )
            _coerce_numbers(config)
            config.check()
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        return config


def _coerce_numbers(config: SolverConfig) -> None:
    """Reject values of the wrong type early (e.g. strings for numbers)."""
    for name in ("gamma_scale", "tol", "stall_eps"):
        float(getattr(config, name))
    for name in ("max_iter", "stall_window", "seed", "stack"):
        value = getattr(config, name)
        if isinstance(value, bool) or int(value) != value:
            raise ValueError(f"{name} must be an integer, got {value!r}")


def load_config(path: str) -> SolverConfig:
    """Read a config file; `.yaml`/`.yml` through PyYAML, anything else as JSON."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith((".yaml", ".yml")):
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f"line {mark.line + 1} column {mark.column + 1}" if mark else path
            raise ConfigError(f"{where}: {exc}") from exc
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return SolverConfig.from_dict(data or {})


def save_config(config: SolverConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2)
        fh.write("\n")


def thread_count() -> int:
    """Worker threads for string-level parallelism, from SACQ_THREADS."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
