"""Metric projections onto half-spaces and the nonnegative orthant."""

from dataclasses import dataclass, field

import numpy as np

from sacq.errors import InvalidOperatorError
from sacq.operators.base import FEASIBILITY_TOL, Operator, Sense, as_vector


@dataclass(frozen=True, eq=False)
class HalfSpace:
    """{x : <normal, x> <= bound} for UPPER, {x : <normal, x> >= bound} for LOWER."""

    normal: np.ndarray
    bound: float
    sense: Sense = Sense.UPPER
    norm_sq: float = field(init=False, repr=False)

    def __post_init__(self):
        try:
            normal = as_vector(self.normal, what="half-space normal")
        except ValueError as exc:
            raise InvalidOperatorError(str(exc)) from None
        norm_sq = float(np.dot(normal, normal))
        if norm_sq <= 0.0:
            raise InvalidOperatorError("half-space normal is the zero vector")
        if not np.isfinite(self.bound):
            raise InvalidOperatorError(f"half-space bound is not finite: {self.bound!r}")
        normal.setflags(write=False)
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "bound", float(self.bound))
        object.__setattr__(self, "sense", Sense.parse(self.sense))
        object.__setattr__(self, "norm_sq", norm_sq)

    @property
    def dim(self) -> int:
        return self.normal.shape[0]

    def excess(self, x: np.ndarray) -> float:
        """Signed amount by which `x` violates the inequality (<= 0 inside)."""
        return self.sense.sign * (float(np.dot(self.normal, x)) - self.bound)

    def distance(self, x: np.ndarray) -> float:
        return max(self.excess(x), 0.0) / np.sqrt(self.norm_sq)

    def contains(self, x: np.ndarray, tol: float = FEASIBILITY_TOL) -> bool:
        return self.excess(x) <= tol


def project_halfspace(hs: HalfSpace, x) -> np.ndarray:
    """Nearest point of `x` in the half-space `hs`."""
    return _project(hs, as_vector(x, hs.dim, "x"))


def _project(hs: HalfSpace, x: np.ndarray) -> np.ndarray:
    excess = hs.excess(x)
    if excess <= FEASIBILITY_TOL:
        return x.copy()
    return x - (hs.sense.sign * excess / hs.norm_sq) * hs.normal


def project_orthant(x) -> np.ndarray:
    """Component-wise max(0, x_i); negative zeros come back as +0.0."""
    x = as_vector(x)
    return np.maximum(x, 0.0) + 0.0


class HalfSpaceProjector(Operator):
    kind = "halfspace"

    def __init__(self, halfspace: HalfSpace):
        self.halfspace = halfspace
        self.dim = halfspace.dim

    def _apply(self, x):
        return _project(self.halfspace, x)

    def describe(self) -> str:
        hs = self.halfspace
        op = "<=" if hs.sense is Sense.UPPER else ">="
        return f"<a, x> {op} {hs.bound:g} (n={hs.dim})"


class OrthantProjector(Operator):
    kind = "orthant"

    def __init__(self, dim=None):
        self.dim = dim

    def _apply(self, x):
        return np.maximum(x, 0.0) + 0.0


class Identity(Operator):
    """Identity; also pads blocks that carry no range-space operator."""

    kind = "identity"

    def __init__(self, dim=None):
        self.dim = dim

    def _apply(self, x):
        return x.copy()
