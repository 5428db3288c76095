"""Operators built from other operators: relaxation, composition, convex combination."""

from typing import Sequence

import numpy as np

from sacq.errors import InvalidOperatorError
from sacq.operators.base import Operator, as_vector, common_dim

WEIGHT_SUM_TOL = 1e-12


def check_relaxation(lam: float) -> float:
    """Validate a relaxation parameter; values in [0, 1] keep cutters cutters."""
    lam = float(lam)
    if not (0.0 <= lam <= 2.0):
        raise InvalidOperatorError(f"relaxation parameter must lie in [0, 2], got {lam!r}")
    return lam


class Relaxation(Operator):
    """(1 - lam) x + lam T(x)."""

    kind = "relaxation"

    def __init__(self, base: Operator, lam: float):
        self.base = base
        self.lam = check_relaxation(lam)
        self.dim = base.dim

    def _apply(self, x):
        if self.lam == 1.0:
            return self.base._apply(x)
        if self.lam == 0.0:
            return x.copy()
        return (1.0 - self.lam) * x + self.lam * self.base._apply(x)

    def describe(self) -> str:
        return f"lam={self.lam:g} of {self.base.describe()}"


class Composition(Operator):
    """T_1 T_2 ... T_k: the last listed operator is applied first."""

    kind = "composition"

    def __init__(self, operators: Sequence[Operator]):
        operators = tuple(operators)
        if not operators:
            raise InvalidOperatorError("composition needs at least one operator")
        self.operators = operators
        self.dim = common_dim(operators, "composition member")

    def _apply(self, x):
        for op in reversed(self.operators):
            x = op._apply(x)
        return x

    def describe(self) -> str:
        return f"{len(self.operators)} factors"


class ConvexCombination(Operator):
    """sum_i w_i T_i(x), summed in listed order."""

    kind = "convex_combination"

    def __init__(self, operators: Sequence[Operator], weights: Sequence[float]):
        operators = tuple(operators)
        if not operators:
            raise InvalidOperatorError("convex combination needs at least one operator")
        try:
            weights = as_vector(weights, len(operators), "weights")
        except ValueError as exc:
            raise InvalidOperatorError(str(exc)) from None
        if np.any(weights <= 0.0):
            raise InvalidOperatorError("convex combination weights must be positive")
        total = float(sum(weights))
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise InvalidOperatorError(f"convex combination weights sum to {total!r}, not 1")
        self.operators = operators
        self.weights = tuple(float(w) for w in weights)
        self.dim = common_dim(operators, "convex combination member")

    def _apply(self, x):
        out = np.zeros_like(x)
        for w, op in zip(self.weights, self.operators):
            out += w * op._apply(x)
        return out

    def describe(self) -> str:
        return f"{len(self.operators)} terms"


def relax(op: Operator, lam: float, x) -> np.ndarray:
    """Evaluate the lam-relaxation of `op` at `x`."""
    return Relaxation(op, lam).apply(x)
