"""Landweber-type operators V = I - gamma A^T (I - T) A.

V transports an operator T acting on the range of a linear map A back to
the domain: Fix(V) = {x : Ax in Fix(T)}, and V is a cutter whenever T is
one and 0 < gamma < 1/||A||^2.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.sparse as sp

from sacq.errors import DimensionMismatchError, InvalidOperatorError, NormEstimationError
from sacq.log import get_logger
from sacq.operators.base import Operator, as_vector
from sacq.operators.combinators import Composition

log = get_logger(__name__)

DEFAULT_NORM_TOL = 1e-10
DEFAULT_NORM_MAX_ITER = 10_000
# step ratios above this are too close to 1 to extrapolate the remaining gap
MAX_STEP_RATIO = 0.9
DEFAULT_GAMMA_SCALE = 0.95


@dataclass(frozen=True, eq=False)
class LinearMap:
    """An m x n matrix stored dense (ndarray) or sparse (CSR plus CSR transpose)."""

    matrix: object
    transpose: object = field(init=False, repr=False)

    def __post_init__(self):
        m = self.matrix
        if sp.issparse(m):
            m = sp.csr_matrix(m, dtype=np.float64)
            m.sum_duplicates()
            data_ok = np.all(np.isfinite(m.data))
            t = m.T.tocsr()
        else:
            m = np.array(m, dtype=np.float64)
            if m.ndim != 2:
                raise InvalidOperatorError(f"linear map must be 2-D, got shape {m.shape}")
            data_ok = np.all(np.isfinite(m))
            m.setflags(write=False)
            t = m.T
        if m.shape[0] < 1 or m.shape[1] < 1:
            raise InvalidOperatorError(f"linear map needs at least one row and column, got {m.shape}")
        if not data_ok:
            raise InvalidOperatorError("linear map has non-finite coefficients")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "transpose", t)

    @classmethod
    def from_dense(cls, rows) -> "LinearMap":
        return cls(np.asarray(rows, dtype=np.float64))

    @classmethod
    def from_triplets(cls, shape, entries) -> "LinearMap":
        """Build a sparse map from (row, col, value) triplets; duplicates add up."""
        m, n = int(shape[0]), int(shape[1])
        entries = list(entries)
        if entries:
            i, j, v = zip(*entries)
        else:
            i, j, v = (), (), ()
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        if i.size and (i.min() < 0 or i.max() >= m or j.min() < 0 or j.max() >= n):
            raise InvalidOperatorError(f"triplet index outside shape {(m, n)}")
        coo = sp.coo_matrix((np.asarray(v, dtype=np.float64), (i, j)), shape=(m, n))
        return cls(coo.tocsr())

    @property
    def shape(self) -> tuple:
        return self.matrix.shape

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        if x.shape[0] != self.cols:
            raise DimensionMismatchError(self.cols, x.shape[0], "A x")
        return np.asarray(self.matrix @ x, dtype=np.float64).ravel()

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        if y.shape[0] != self.rows:
            raise DimensionMismatchError(self.rows, y.shape[0], "A^T y")
        return np.asarray(self.transpose @ y, dtype=np.float64).ravel()

    def row(self, i: int) -> np.ndarray:
        if self.is_sparse:
            return self.matrix.getrow(i).toarray().ravel()
        return np.array(self.matrix[i], dtype=np.float64)

    def to_dense(self) -> np.ndarray:
        if self.is_sparse:
            return self.matrix.toarray()
        return np.array(self.matrix)

    def triplets(self) -> list:
        """(row, col, value) for every stored nonzero, row-major."""
        coo = sp.coo_matrix(self.matrix)
        order = np.lexsort((coo.col, coo.row))
        return [
            (int(coo.row[k]), int(coo.col[k]), float(coo.data[k]))
            for k in order
            if coo.data[k] != 0.0
        ]

    def row_norms(self) -> np.ndarray:
        if self.is_sparse:
            sq = np.asarray(self.matrix.multiply(self.matrix).sum(axis=1)).ravel()
        else:
            sq = np.einsum("ij,ij->i", self.matrix, self.matrix)
        return np.sqrt(sq)

    def frobenius_sq(self) -> float:
        if self.is_sparse:
            return float(np.dot(self.matrix.data, self.matrix.data))
        return float(np.sum(self.matrix * self.matrix))

    @cached_property
    def norm_sq_upper(self) -> float:
        """Upper bound on ||A||^2, estimated once per map.

        Power iteration gives an extrapolated estimate; when it cannot settle
        (nearly equal top singular values) the Frobenius norm squared is used.
        The extrapolation is not a certificate: a slowly decaying component
        with a tiny start weight can leave a relative shortfall of order tol,
        which the gamma_scale margin below 1 absorbs.
        """
        try:
            return spectral_norm_sq(self)
        except NormEstimationError as exc:
            fallback = self.frobenius_sq()
            log.warning(
                "power iteration did not converge for a %dx%d map (estimate %.6g); "
                "using the Frobenius bound %.6g",
                self.rows, self.cols, exc.estimate, fallback,
            )
            return fallback


def spectral_norm_sq(
    linear_map: LinearMap,
    tol: float = DEFAULT_NORM_TOL,
    max_iter: int = DEFAULT_NORM_MAX_ITER,
) -> float:
    """Estimate ||A||^2 by power iteration on A^T A.

    The Rayleigh quotients increase towards ||A||^2. The iteration stops
    once successive quotients differ by at most `tol` relatively while their
    steps shrink by a ratio of at most MAX_STEP_RATIO; the remaining gap is
    extrapolated from that ratio and added before inflating by (1 + 10 tol).
    Steps at rounding level also stop it. The result never exceeds the
    Frobenius bound. Nearly equal top singular values keep the ratio close
    to 1, and after `max_iter` iterations NormEstimationError is raised,
    carrying the best inflated estimate.

    The start vector is pseudo-random but seeded by the map's shape, so the
    estimate is reproducible.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    frobenius = linear_map.frobenius_sq()
    if frobenius == 0.0:
        raise InvalidOperatorError("linear map is zero; 1/||A||^2 is undefined")

    rng = np.random.default_rng([linear_map.rows, linear_map.cols])
    v = rng.standard_normal(linear_map.cols)
    v /= np.linalg.norm(v)
    inflate = 1.0 + 10.0 * tol
    noise = 8.0 * np.finfo(np.float64).eps

    previous = None
    last_step = None
    rayleigh = 0.0
    for _ in range(max_iter):
        av = linear_map.matvec(v)
        rayleigh = float(np.dot(av, av))
        w = linear_map.rmatvec(av)
        w_norm = float(np.linalg.norm(w))
        if w_norm == 0.0:
            # v fell into the null space; restart from a fresh direction
            v = rng.standard_normal(linear_map.cols)
            v /= np.linalg.norm(v)
            previous = last_step = None
            continue
        if previous is not None:
            step = rayleigh - previous
            if step <= noise * rayleigh:
                return min(rayleigh * inflate, frobenius)
            ratio = step / last_step if last_step else 1.0
            if step <= tol * rayleigh and ratio <= MAX_STEP_RATIO:
                tail = step * ratio / (1.0 - ratio)
                return min((rayleigh + tail) * inflate, frobenius)
            last_step = step
        previous = rayleigh
        v = w / w_norm
    raise NormEstimationError(
        f"power iteration did not converge in {max_iter} iterations", rayleigh * inflate
    )


class LandweberOp(Operator):
    """V(x) = x - gamma A^T (A x - T(A x))."""

    kind = "landweber"

    def __init__(
        self,
        linear_map: LinearMap,
        target: Operator,
        gamma: Optional[float] = None,
        norm_sq_upper: Optional[float] = None,
    ):
        if target.dim is not None and target.dim != linear_map.rows:
            raise DimensionMismatchError(linear_map.rows, target.dim, "Landweber target operator")
        bound = float(norm_sq_upper) if norm_sq_upper is not None else linear_map.norm_sq_upper
        if gamma is None:
            gamma = DEFAULT_GAMMA_SCALE / bound
        gamma = float(gamma)
        if not (0.0 < gamma < 1.0 / bound):
            raise InvalidOperatorError(
                f"gamma must lie in (0, 1/L) = (0, {1.0 / bound:.6g}), got {gamma!r}"
            )
        self.map = linear_map
        self.target = target
        self.gamma = gamma
        self.norm_sq_upper = bound
        self.dim = linear_map.cols

    def _apply(self, x):
        ax = self.map.matvec(x)
        residual = ax - self.target._apply(ax)
        return x - self.gamma * self.map.rmatvec(residual)

    def describe(self) -> str:
        return f"gamma={self.gamma:.4g}, A {self.map.rows}x{self.map.cols}, T={self.target.describe()}"


def apply_landweber(op: LandweberOp, x) -> np.ndarray:
    return op.apply(as_vector(x, op.dim, "x"))


def stacked(target: Operator, count: int) -> Operator:
    """Product of `count` copies of `target`."""
    count = int(count)
    if count < 1:
        raise InvalidOperatorError(f"stack count must be at least 1, got {count}")
    if count == 1:
        return target
    return Composition([target] * count)


def make_block_operator(u: Operator, v: LandweberOp) -> Composition:
    """R = U V: V first, then U."""
    if u.dim is not None and v.dim is not None and u.dim != v.dim:
        raise DimensionMismatchError(v.dim, u.dim, "block operator factor U")
    return Composition([u, v])


def fixed_point_residual(op: Operator, x) -> float:
    """||T(x) - x||."""
    x = as_vector(x, op.dim, "x")
    return float(np.linalg.norm(op.apply(x) - x))
