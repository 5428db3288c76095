"""Plan evaluation: dose-volume histograms and per-structure constraint counts."""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from sacq.errors import DimensionMismatchError, NegativeDoseError
from sacq.operators import as_vector
from sacq.pvc import count_violations, distance_sq, is_member
from sacq.rttp.problem import BlockSpec, halfspace_dist_sq

DEFAULT_TOL = 1e-3
DEFAULT_DVH_POINTS = 41


@dataclass(frozen=True)
class DvhCurve:
    """Cumulative DVH: fraction of voxels receiving at least each threshold."""

    thresholds: np.ndarray
    fractions: np.ndarray

    def __len__(self) -> int:
        return self.thresholds.shape[0]

    def rows(self) -> list:
        return list(zip(self.thresholds.tolist(), self.fractions.tolist()))


def compute_dvh(dose, thresholds) -> DvhCurve:
    dose = as_vector(dose, what="dose")
    if np.any(dose < 0.0):
        raise NegativeDoseError(f"dose has {int(np.count_nonzero(dose < 0.0))} negative entries")
    thresholds = np.sort(np.asarray(thresholds, dtype=np.float64).ravel())
    if thresholds.size == 0:
        return DvhCurve(thresholds, np.empty(0))
    ordered = np.sort(dose)
    # count of dose >= tau is m minus the count strictly below tau
    below = np.searchsorted(ordered, thresholds, side="left")
    fractions = (dose.shape[0] - below) / dose.shape[0]
    return DvhCurve(thresholds, fractions.astype(np.float64))


def default_thresholds(doses: Sequence[np.ndarray], bounds: Sequence[np.ndarray], points: int = DEFAULT_DVH_POINTS) -> np.ndarray:
    """Evenly spaced thresholds from 0 to a little past the largest dose or bound."""
    top = max(
        max(float(np.max(d)) for d in doses),
        max(float(np.max(b)) for b in bounds),
    )
    if top <= 0.0:
        top = 1.0
    return np.linspace(0.0, 1.1 * top, points)


@dataclass
class BlockEval:
    name: str
    sense: str
    rows: int
    relaxed_violations: int
    original_violations: int
    allowed_violations: Optional[int]
    pvc_satisfied: bool
    dvh: DvhCurve
    min_dose: float
    max_dose: float
    mean_dose: float

    @property
    def satisfied(self) -> bool:
        return self.relaxed_violations == 0 and self.pvc_satisfied

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "sense": self.sense,
            "rows": self.rows,
            "relaxed_violations": self.relaxed_violations,
            "original_violations": self.original_violations,
            "allowed_violations": self.allowed_violations,
            "pvc_satisfied": self.pvc_satisfied,
            "min_dose": self.min_dose,
            "max_dose": self.max_dose,
            "mean_dose": self.mean_dose,
            "dvh": [{"threshold": t, "fraction": f} for t, f in self.dvh.rows()],
        }


@dataclass
class PlanEval:
    blocks: list = field(default_factory=list)
    proximity: float = 0.0
    negative_entries: int = 0

    @property
    def feasible(self) -> bool:
        return self.negative_entries == 0 and all(b.satisfied for b in self.blocks)

    def violated_blocks(self) -> list:
        return [b.name for b in self.blocks if not b.satisfied]

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "proximity": self.proximity,
            "negative_entries": self.negative_entries,
            "blocks": [b.to_dict() for b in self.blocks],
        }


def evaluate_plan(
    x,
    blocks: Sequence[BlockSpec],
    thresholds=None,
    tol: float = DEFAULT_TOL,
) -> PlanEval:
    """Evaluate an intensity vector against every block.

    A row counts as violated when its distance to the relaxed half-space
    exceeds `tol`; PVC membership counts original-bound misses larger than
    `tol` in dose. Entries of x below -tol are reported as negative;
    smaller negative noise is clipped before the DVH is taken.
    """
    blocks = list(blocks)
    x = as_vector(x, what="x")
    for block in blocks:
        if block.map.cols != x.shape[0]:
            raise DimensionMismatchError(block.map.cols, x.shape[0], f"x for block {block.name!r}")

    doses = [block.map.matvec(x) for block in blocks]
    if thresholds is None:
        thresholds = default_thresholds(
            [np.maximum(d, 0.0) for d in doses], [b.bounds for b in blocks]
        )

    result = PlanEval(negative_entries=int(np.count_nonzero(x < -tol)))
    proximity = float(np.sum(np.minimum(x, 0.0) ** 2))
    for block, dose in zip(blocks, doses):
        relaxed = block.relaxed_bounds()
        dist_sq = halfspace_dist_sq(dose, relaxed, block.map.row_norms(), block.sense)
        proximity += float(np.sum(dist_sq))
        relaxed_violations = int(np.count_nonzero(dist_sq > tol * tol))

        original = int(np.count_nonzero(block.sense.sign * (dose - block.bounds) > tol))
        pvc = block.pvc_set()
        if pvc is not None:
            proximity += distance_sq(dose, pvc)
            satisfied = is_member(dose, pvc, tol)
            allowed = pvc.max_violations
            original = count_violations(dose, pvc, tol).count
        else:
            satisfied = True
            allowed = None

        clipped = np.maximum(dose, 0.0)
        result.blocks.append(
            BlockEval(
                name=block.name,
                sense=block.sense.value,
                rows=block.rows,
                relaxed_violations=relaxed_violations,
                original_violations=original,
                allowed_violations=allowed,
                pvc_satisfied=satisfied,
                dvh=compute_dvh(clipped, thresholds),
                min_dose=float(dose.min()),
                max_dose=float(dose.max()),
                mean_dose=float(dose.mean()),
            )
        )
    result.proximity = proximity
    return result
