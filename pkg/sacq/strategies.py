"""String plans and the strategies that pick one per iteration.

A string is an index vector t = (t_1, ..., t_q) of operator indices
(0-based). A plan is a fit family of strings with positive weights summing
to one; the admissible plans are bounded by a minimum weight delta and a
maximum string length q_bar.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from sacq.errors import (
    ConfigError,
    NotFitError,
    PlanValidationError,
    StringIndexError,
    StringTooLongError,
    WeightBelowDeltaError,
    WeightSumError,
)

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class StringPlan:
    """Strings and their weights, kept in lexicographic string order."""

    strings: tuple
    weights: tuple

    @classmethod
    def create(cls, strings: Sequence[Sequence[int]], weights: Sequence[float]) -> "StringPlan":
        strings = [tuple(int(i) for i in s) for s in strings]
        weights = [float(w) for w in weights]
        if len(strings) != len(weights):
            raise PlanValidationError(
                f"{len(strings)} strings but {len(weights)} weights"
            )
        if not strings:
            raise PlanValidationError("plan has no strings")
        if any(len(s) == 0 for s in strings):
            raise PlanValidationError("strings must be nonempty")
        if len(set(strings)) != len(strings):
            raise PlanValidationError("plan lists the same string twice")
        pairs = sorted(zip(strings, weights))
        return cls(tuple(s for s, _ in pairs), tuple(w for _, w in pairs))

    def items(self):
        return zip(self.strings, self.weights)

    @property
    def longest(self) -> int:
        return max(len(s) for s in self.strings)

    def to_dict(self) -> dict:
        return {"strings": [list(s) for s in self.strings], "weights": list(self.weights)}

    @classmethod
    def from_dict(cls, data: dict) -> "StringPlan":
        return cls.create(data["strings"], data["weights"])


@dataclass(frozen=True)
class PlanConstraints:
    """delta in (0, 1/p) bounds weights from below; q_bar >= p bounds string length."""

    delta: float
    q_bar: int

    @classmethod
    def default(cls, p: int, longest: int = 0) -> "PlanConstraints":
        return cls(delta=1.0 / (2 * p), q_bar=max(p, longest))

    def check(self, p: int) -> None:
        if not (0.0 < self.delta < 1.0 / p):
            raise ConfigError(f"delta must lie in (0, 1/p) = (0, {1.0 / p:.6g}), got {self.delta!r}")
        if self.q_bar < p:
            raise ConfigError(f"q_bar must be at least p={p}, got {self.q_bar}")


def validate_plan(plan: StringPlan, constraints: PlanConstraints, p: int) -> None:
    """Raise the matching PlanValidationError unless `plan` is admissible."""
    for s in plan.strings:
        for i in s:
            if not (0 <= i < p):
                raise StringIndexError(i, p)
        if len(s) > constraints.q_bar:
            raise StringTooLongError(s, constraints.q_bar)
    covered = {i for s in plan.strings for i in s}
    missing = set(range(p)) - covered
    if missing:
        raise NotFitError(missing)
    total = float(sum(plan.weights))
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise WeightSumError(total)
    for s, w in plan.items():
        if w < constraints.delta:
            raise WeightBelowDeltaError(s, w, constraints.delta)


class Strategy:
    """Base class for plan schedules."""

    name: str = ""

    def plan(self, k: int, p: int, constraints: PlanConstraints, state=None) -> StringPlan:
        raise NotImplementedError


class Sequential(Strategy):
    """One string visiting every operator in order."""

    name = "sequential"

    def plan(self, k, p, constraints, state=None):
        return StringPlan((tuple(range(p)),), (1.0,))


class Simultaneous(Strategy):
    """p strings of length one with uniform weights."""

    name = "simultaneous"

    def plan(self, k, p, constraints, state=None):
        return StringPlan(tuple((i,) for i in range(p)), tuple([1.0 / p] * p))


class RandomDynamic(Strategy):
    """A fresh random partition of the operators into strings each iteration.

    The generator is reseeded from (seed, k), so the plan for step k does
    not depend on which plans were drawn before it.
    """

    name = "random-dynamic"

    def __init__(self, seed: int = 0):
        self.seed = int(seed)

    def plan(self, k, p, constraints, state=None):
        rng = np.random.default_rng([self.seed, int(k)])
        order = rng.permutation(p)
        # uniform weights 1/count must stay >= delta; q_bar >= p lets any piece through
        max_strings = max(1, min(p, int(np.floor(1.0 / constraints.delta))))
        count = int(rng.integers(1, max_strings + 1))
        cuts = np.sort(rng.choice(np.arange(1, p), size=count - 1, replace=False)) if count > 1 else []
        pieces = np.split(order, cuts)
        strings = [tuple(int(i) for i in piece) for piece in pieces]
        return StringPlan.create(strings, [1.0 / count] * count)


class Custom(Strategy):
    """A user schedule of plans, cycled over the iterations."""

    name = "custom"

    def __init__(self, schedule: Sequence[StringPlan]):
        if not schedule:
            raise ConfigError("custom strategy needs a nonempty schedule")
        self.schedule = tuple(schedule)

    def plan(self, k, p, constraints, state=None):
        return self.schedule[k % len(self.schedule)]

    def check(self, p: int, constraints: PlanConstraints) -> None:
        for position, plan in enumerate(self.schedule):
            try:
                validate_plan(plan, constraints, p)
            except PlanValidationError as exc:
                raise ConfigError(f"schedule[{position}]: {exc}") from exc


ALL_STRATEGIES = {
    Sequential.name: Sequential,
    Simultaneous.name: Simultaneous,
    RandomDynamic.name: RandomDynamic,
    Custom.name: Custom,
}


def next_plan(
    strategy: Strategy,
    k: int,
    p: int,
    constraints: PlanConstraints,
    state: Optional[object] = None,
) -> StringPlan:
    """The plan (Theta_k, w_k) for iteration k; always admissible."""
    plan = strategy.plan(k, p, constraints, state)
    validate_plan(plan, constraints, p)
    return plan
