"""Block-structured dose problems and their translation into a split problem.

Each block is one anatomical structure: a dose map A_l (voxels x beamlets),
a bound per voxel and a sense. Avoidance structures carry upper bounds,
targets carry lower bounds. A block may carry a percentage-violation
constraint (alpha, beta): up to a fraction alpha of its voxels may miss the
original bound, none by more than a fraction beta.

Translation produces, for every voxel row, a half-space with the bound
relaxed by beta, and for every PVC block a Landweber operator over the
exact projection onto the PVC set built on the original bounds. The
nonnegative orthant is appended as one more domain operator.
"""

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from sacq.errors import DimensionMismatchError, InvalidOperatorError
from sacq.landweber import DEFAULT_GAMMA_SCALE, LandweberOp, LinearMap, make_block_operator, stacked
from sacq.log import get_logger
from sacq.operators import (
    Composition,
    ConvexCombination,
    HalfSpace,
    HalfSpaceProjector,
    Operator,
    OrthantProjector,
    Relaxation,
    Sense,
    as_vector,
)
from sacq.pvc import PvcProjector, PvcSet, count_violations, distance_sq, translate_bounds

log = get_logger(__name__)


@dataclass(frozen=True)
class PvcSpec:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise InvalidOperatorError(f"PVC alpha must lie in [0, 1], got {self.alpha!r}")
        if not (0.0 < self.beta < 1.0):
            raise InvalidOperatorError(f"PVC beta must lie in (0, 1), got {self.beta!r}")


@dataclass(frozen=True, eq=False)
class BlockSpec:
    """One structure: dose map, bound vector, sense and optional PVC."""

    name: str
    map: LinearMap
    sense: Sense
    bounds: np.ndarray
    pvc: Optional[PvcSpec] = None

    def __post_init__(self):
        bounds = as_vector(self.bounds, what=f"block {self.name!r} bounds").copy()
        if bounds.shape[0] != self.map.rows:
            raise DimensionMismatchError(self.map.rows, bounds.shape[0], f"block {self.name!r} bounds")
        bounds.setflags(write=False)
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "sense", Sense.parse(self.sense))

    @property
    def rows(self) -> int:
        return self.map.rows

    @property
    def beta(self) -> float:
        return self.pvc.beta if self.pvc is not None else 0.0

    def relaxed_bounds(self) -> np.ndarray:
        if self.pvc is None:
            return np.array(self.bounds)
        return translate_bounds(self.bounds, self.pvc.beta, self.sense)

    def pvc_set(self) -> Optional[PvcSet]:
        if self.pvc is None:
            return None
        return PvcSet.from_alpha(self.bounds, self.sense, self.pvc.alpha)


@dataclass(frozen=True)
class BlockParams:
    """Per-block relaxation lambda_l, Landweber step gamma_l (None without PVC) and N_q."""

    lambdas: tuple
    gammas: tuple
    stacks: tuple

    def with_block(self, index: int, lam: Optional[float] = None, stack: Optional[int] = None) -> "BlockParams":
        lambdas = list(self.lambdas)
        stacks = list(self.stacks)
        if lam is not None:
            lambdas[index] = lam
        if stack is not None:
            stacks[index] = stack
        return replace(self, lambdas=tuple(lambdas), stacks=tuple(stacks))


@dataclass(frozen=True)
class ViolationCounts:
    """Per-block relaxed-bound violations and PVC excess (violations beyond K)."""

    halfspace: tuple
    pvc_excess: tuple

    @property
    def total(self) -> int:
        return sum(self.halfspace) + sum(self.pvc_excess)


def halfspace_dist_sq(dose: np.ndarray, bounds: np.ndarray, row_norms: np.ndarray, sense: Sense) -> np.ndarray:
    """Squared distance of x to every row half-space, given dose = A x."""
    excess = np.maximum(sense.sign * (dose - bounds), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        dist = np.where(row_norms > 0.0, excess / row_norms, np.where(excess > 0.0, np.inf, 0.0))
    return dist * dist


@dataclass(eq=False)
class SplitProblem:
    """The translated problem: half-spaces, PVC sets and Landweber operators."""

    dimension: int
    blocks: tuple
    halfspaces: tuple
    block_rows: tuple
    relaxed_bounds: tuple
    row_norms: tuple
    pvc_sets: dict
    landweber: dict
    gamma_scale: float = DEFAULT_GAMMA_SCALE
    _projectors: tuple = field(default=(), repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def block_count(self) -> int:
        return len(self.blocks)

    @property
    def operator_count(self) -> int:
        """p: one operator per block plus the orthant projector."""
        return len(self.blocks) + 1

    @property
    def block_names(self) -> tuple:
        return tuple(b.name for b in self.blocks)

    @property
    def pvc_blocks(self) -> tuple:
        return tuple(sorted(self.pvc_sets))

    def norm_sq(self, index: int) -> float:
        return self.landweber[index].norm_sq_upper

    def default_params(self, lam: float = 1.0, stack: int = 1, gamma_scale: Optional[float] = None) -> BlockParams:
        scale = self.gamma_scale if gamma_scale is None else gamma_scale
        gammas = tuple(
            scale / self.norm_sq(i) if i in self.landweber else None
            for i in range(self.block_count)
        )
        return BlockParams(
            lambdas=tuple([float(lam)] * self.block_count),
            gammas=gammas,
            stacks=tuple([int(stack)] * self.block_count),
        )

    def block_operator(self, index: int, params: BlockParams, sweep: str = "sequential") -> Operator:
        """R_l = U_l V_l for block `index` under `params`."""
        lam = params.lambdas[index]
        projectors = self._projectors[index]
        members = [p if lam == 1.0 else Relaxation(p, lam) for p in projectors]
        if sweep == "simultaneous":
            u = ConvexCombination(members, [1.0 / len(members)] * len(members))
        else:
            # first row acts first
            u = Composition(list(reversed(members)))
        if index not in self.pvc_sets:
            return u
        base = self.landweber[index]
        target = stacked(PvcProjector(self.pvc_sets[index]), params.stacks[index])
        v = LandweberOp(base.map, target, gamma=params.gammas[index], norm_sq_upper=base.norm_sq_upper)
        return make_block_operator(u, v)

    def operators(self, params: BlockParams, sweep: str = "sequential") -> list:
        """[R_1, ..., R_L, P_orthant] for the given parameters (cached)."""
        key = (params, sweep)
        ops = self._cache.get(key)
        if ops is None:
            ops = [self.block_operator(i, params, sweep) for i in range(self.block_count)]
            ops.append(OrthantProjector(self.dimension))
            if len(self._cache) > 16:
                self._cache.clear()
            self._cache[key] = ops
        return list(ops)

    def doses(self, x: np.ndarray) -> list:
        return [b.map.matvec(x) for b in self.blocks]

    def proximity(self, x) -> float:
        """Sum of squared distances of x to every set of the problem."""
        x = as_vector(x, self.dimension, "x")
        total = float(np.sum(np.minimum(x, 0.0) ** 2))
        for i, (block, dose) in enumerate(zip(self.blocks, self.doses(x))):
            total += float(np.sum(halfspace_dist_sq(dose, self.relaxed_bounds[i], self.row_norms[i], block.sense)))
            if i in self.pvc_sets:
                total += distance_sq(dose, self.pvc_sets[i])
        return total

    def violation_counts(self, x, tol: float = 0.0) -> ViolationCounts:
        """Rows farther than `tol` from their half-space; PVC violations beyond K."""
        x = as_vector(x, self.dimension, "x")
        halfspace = []
        pvc_excess = []
        for i, (block, dose) in enumerate(zip(self.blocks, self.doses(x))):
            excess = block.sense.sign * (dose - self.relaxed_bounds[i])
            halfspace.append(int(np.count_nonzero(excess > tol * self.row_norms[i])))
            if i in self.pvc_sets:
                pvc = self.pvc_sets[i]
                over = count_violations(dose, pvc, tol).count - pvc.max_violations
                pvc_excess.append(max(0, over))
            else:
                pvc_excess.append(0)
        return ViolationCounts(tuple(halfspace), tuple(pvc_excess))


def translate_problem(blocks: Sequence[BlockSpec], gamma_scale: float = DEFAULT_GAMMA_SCALE) -> SplitProblem:
    """Build the split problem for a list of blocks.

    Blocks without a PVC keep their bounds unrelaxed (beta = 0). Zero rows
    are rejected: with a finite bound they are either vacuous or infeasible.
    """
    blocks = tuple(blocks)
    if not blocks:
        raise InvalidOperatorError("problem has no blocks")
    if not (0.0 < gamma_scale < 1.0):
        raise InvalidOperatorError(f"gamma_scale must lie in (0, 1), got {gamma_scale!r}")
    n = blocks[0].map.cols
    for block in blocks[1:]:
        if block.map.cols != n:
            raise DimensionMismatchError(n, block.map.cols, f"block {block.name!r} columns")

    halfspaces = []
    block_rows = []
    relaxed_all = []
    norms_all = []
    projectors = []
    pvc_sets = {}
    landweber = {}
    for index, block in enumerate(blocks):
        relaxed = block.relaxed_bounds()
        norms = block.map.row_norms()
        zero = np.flatnonzero(norms == 0.0)
        if zero.size:
            raise InvalidOperatorError(
                f"block {block.name!r} has zero rows {zero[:10].tolist()}; remove or fix them"
            )
        start = len(halfspaces)
        block_hs = [HalfSpace(block.map.row(i), relaxed[i], block.sense) for i in range(block.rows)]
        halfspaces.extend(block_hs)
        projectors.append(tuple(HalfSpaceProjector(hs) for hs in block_hs))
        block_rows.append(range(start, len(halfspaces)))
        relaxed_all.append(relaxed)
        norms_all.append(norms)

        pvc = block.pvc_set()
        if pvc is not None:
            pvc_sets[index] = pvc
            norm_sq = block.map.norm_sq_upper
            landweber[index] = LandweberOp(
                block.map, PvcProjector(pvc), gamma=gamma_scale / norm_sq, norm_sq_upper=norm_sq
            )
            log.debug(
                "block %s: PVC K=%d of %d rows, L=%.6g",
                block.name, pvc.max_violations, block.rows, norm_sq,
            )

    return SplitProblem(
        dimension=n,
        blocks=blocks,
        halfspaces=tuple(halfspaces),
        block_rows=tuple(block_rows),
        relaxed_bounds=tuple(relaxed_all),
        row_norms=tuple(norms_all),
        pvc_sets=pvc_sets,
        landweber=landweber,
        gamma_scale=gamma_scale,
        _projectors=tuple(projectors),
    )
