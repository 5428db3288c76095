"""Base class for fixed-point operators on Euclidean space."""

import enum
from typing import Optional

import numpy as np

from sacq.errors import DimensionMismatchError, InvalidOperatorError

# Absolute slack on a constraint residual below which a point counts as
# already inside the set.
FEASIBILITY_TOL = 1e-12


class Sense(str, enum.Enum):
    """Direction of a scalar bound: <x, a> <= b (UPPER) or >= c (LOWER)."""

    UPPER = "upper"
    LOWER = "lower"

    @property
    def sign(self) -> float:
        return 1.0 if self is Sense.UPPER else -1.0

    @classmethod
    def parse(cls, value) -> "Sense":
        if isinstance(value, Sense):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"sense must be 'upper' or 'lower', got {value!r}") from None


def as_vector(x, dim: Optional[int] = None, what: str = "vector") -> np.ndarray:
    """Coerce `x` to a finite 1-D float64 array, optionally of length `dim`."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"{what} must be one-dimensional, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatchError(dim, arr.shape[0], what)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} has non-finite entries")
    return arr


class Operator:
    """An immutable operator x -> T(x) on R^n.

    Subclasses implement `_apply` on an already validated vector. `dim` is
    the domain dimension, or None for operators that act on any dimension
    (identity, orthant projection).
    """

    kind: str = ""
    dim: Optional[int] = None

    def __call__(self, x) -> np.ndarray:
        return self.apply(x)

    def apply(self, x) -> np.ndarray:
        vec = np.asarray(x, dtype=np.float64)
        if vec.ndim != 1:
            vec = as_vector(vec)
        if self.dim is not None and vec.shape[0] != self.dim:
            raise DimensionMismatchError(self.dim, vec.shape[0], f"{self.kind} input")
        return self._apply(vec)

    def _apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> str:
        return self.kind

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.describe()}>"


def common_dim(operators, what: str = "operator") -> Optional[int]:
    """Return the shared domain dimension of `operators` (None if all agnostic)."""
    dim = None
    for op in operators:
        if op.dim is None:
            continue
        if dim is None:
            dim = op.dim
        elif op.dim != dim:
            raise DimensionMismatchError(dim, op.dim, what)
    return dim


def apply(op: Operator, x) -> np.ndarray:
    """Evaluate an operator tree at `x`."""
    if not isinstance(op, Operator):
        raise InvalidOperatorError(f"not an operator: {op!r}")
    return op.apply(x)


def cutter_residual(op: Operator, x, w) -> float:
    """<T(x) - x, T(x) - w>; a value <= 0 certifies the cutter inequality at (x, w)."""
    x = as_vector(x, op.dim, "x")
    w = as_vector(w, x.shape[0], "w")
    tx = op.apply(x)
    return float(np.dot(tx - x, tx - w))
