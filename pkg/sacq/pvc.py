"""Percentage-violation constraints.

A PVC on a group of m scalar bounds allows at most K = floor(alpha * m)
of them to be violated. The admissible set

    {y : ||(y - b)_+||_0 <= K}        (upper bounds)
    {y : ||(c - y)_+||_0 <= K}        (lower bounds)

is a finite union of boxes and therefore non-convex, but its Euclidean
projection has a closed form: keep the K largest violations and clip the
rest to their bounds.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from sacq.errors import DimensionMismatchError, InvalidOperatorError
from sacq.operators.base import Operator, Sense, as_vector


def max_violations(alpha: float, rows: int) -> int:
    """Largest integer count not exceeding alpha * rows."""
    if not (0.0 <= alpha <= 1.0):
        raise InvalidOperatorError(f"alpha must lie in [0, 1], got {alpha!r}")
    # guard against alpha * rows landing a hair below an integer
    return min(rows, int(math.floor(alpha * rows + 1e-9)))


def translate_bounds(bounds, beta: float, sense) -> np.ndarray:
    """(1 + beta) b for upper bounds, (1 - beta) c for lower bounds."""
    beta = float(beta)
    if not (0.0 < beta < 1.0):
        raise InvalidOperatorError(f"beta must lie in (0, 1), got {beta!r}")
    bounds = as_vector(bounds, what="bounds")
    if Sense.parse(sense) is Sense.UPPER:
        return (1.0 + beta) * bounds
    return (1.0 - beta) * bounds


@dataclass(frozen=True, eq=False)
class PvcSet:
    """The set of y whose bound violations number at most `max_violations`.

    `bounds` are the original (untranslated) bounds.
    """

    bounds: np.ndarray
    sense: Sense
    max_violations: int

    def __post_init__(self):
        bounds = as_vector(self.bounds, what="PVC bounds").copy()
        bounds.setflags(write=False)
        k = int(self.max_violations)
        if not (0 <= k <= bounds.shape[0]):
            raise InvalidOperatorError(
                f"max_violations must lie in [0, {bounds.shape[0]}], got {self.max_violations!r}"
            )
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "sense", Sense.parse(self.sense))
        object.__setattr__(self, "max_violations", k)

    @classmethod
    def from_alpha(cls, bounds, sense, alpha: float) -> "PvcSet":
        bounds = as_vector(bounds, what="PVC bounds")
        return cls(bounds, Sense.parse(sense), max_violations(alpha, bounds.shape[0]))

    @property
    def dim(self) -> int:
        return self.bounds.shape[0]

    @property
    def is_vacuous(self) -> bool:
        return self.max_violations >= self.dim

    def excess(self, y: np.ndarray) -> np.ndarray:
        """Per-component violation amount (positive where violated)."""
        return self.sense.sign * (y - self.bounds)


@dataclass(frozen=True)
class ViolationReport:
    count: int
    indices: tuple = field(default_factory=tuple)
    magnitudes: tuple = field(default_factory=tuple)


def _check(y, pvc: PvcSet) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] != pvc.dim:
        raise DimensionMismatchError(pvc.dim, y.shape[0] if y.ndim == 1 else -1, "PVC argument")
    return y


def count_violations(y, pvc: PvcSet, tol: float = 0.0) -> ViolationReport:
    """Components strictly beyond their bound (by more than `tol`)."""
    y = _check(y, pvc)
    excess = pvc.excess(y)
    idx = np.flatnonzero(excess > tol)
    return ViolationReport(
        count=int(idx.shape[0]),
        indices=tuple(int(i) for i in idx),
        magnitudes=tuple(float(v) for v in excess[idx]),
    )


def is_member(y, pvc: PvcSet, tol: float = 0.0) -> bool:
    return count_violations(y, pvc, tol).count <= pvc.max_violations


def project_pvc(y, pvc: PvcSet) -> np.ndarray:
    """Exact Euclidean projection of `y` onto the PVC set.

    Keeps the K largest violations (lowest index wins a tie) and clips
    every other violating component to its bound.
    """
    y = _check(y, pvc)
    out = y.copy()
    excess = pvc.excess(y)
    violating = np.flatnonzero(excess > 0.0)
    k = pvc.max_violations
    if violating.shape[0] <= k:
        return out
    # primary key: magnitude descending, secondary: index ascending
    order = np.lexsort((violating, -excess[violating]))
    clipped = violating[order[k:]]
    out[clipped] = pvc.bounds[clipped]
    return out


def distance_sq(y, pvc: PvcSet) -> float:
    """Squared distance from `y` to the PVC set."""
    y = _check(y, pvc)
    diff = y - project_pvc(y, pvc)
    return float(np.dot(diff, diff))


class PvcProjector(Operator):
    """Projection onto a PvcSet, acting in the range space of a block."""

    kind = "pvc"

    def __init__(self, pvc: PvcSet):
        self.pvc = pvc
        self.dim = pvc.dim

    def _apply(self, y):
        return project_pvc(y, self.pvc)

    def describe(self) -> str:
        return f"{self.pvc.sense.value} PVC, K={self.pvc.max_violations} of {self.pvc.dim}"
