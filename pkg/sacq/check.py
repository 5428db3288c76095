"""Independent feasibility check of an intensity vector.

Works straight from the inequalities of the block problem and shares only
the parsed block data with the solver:

    x >= 0
    A_l x <= (1 + beta_l) b_l      upper blocks (beta_l = 0 without a PVC)
    A_l x >= (1 - beta_l) c_l      lower blocks
    #{i : (A_l x)_i beyond its original bound} <= floor(alpha_l * m_l)

A row counts as violated when its Euclidean distance to its half-space
(or, for the PVC count, its dose excess) is larger than `tol`.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

DEFAULT_TOL = 1e-3


@dataclass
class BlockCheck:
    name: str
    sense: str
    rows: int
    relaxed_violations: int
    original_violations: int
    allowed: Optional[int]

    @property
    def pvc_ok(self) -> bool:
        return self.allowed is None or self.original_violations <= self.allowed

    @property
    def ok(self) -> bool:
        return self.relaxed_violations == 0 and self.pvc_ok

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "sense": self.sense,
            "rows": self.rows,
            "relaxed_violations": self.relaxed_violations,
            "original_violations": self.original_violations,
            "allowed": self.allowed,
            "pvc_ok": self.pvc_ok,
            "ok": self.ok,
        }


@dataclass
class CheckReport:
    negative_entries: int = 0
    blocks: list = field(default_factory=list)
    tol: float = DEFAULT_TOL

    @property
    def feasible(self) -> bool:
        return self.negative_entries == 0 and all(b.ok for b in self.blocks)

    def failed_blocks(self) -> list:
        return [b.name for b in self.blocks if not b.ok]

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "tol": self.tol,
            "negative_entries": self.negative_entries,
            "blocks": [b.to_dict() for b in self.blocks],
        }


def _allowed(alpha: float, rows: int) -> int:
    return min(rows, int(math.floor(alpha * rows + 1e-9)))


def check_solution(x: np.ndarray, blocks: Sequence, tol: float = DEFAULT_TOL) -> CheckReport:
    x = np.asarray(x, dtype=np.float64)
    report = CheckReport(negative_entries=int(np.count_nonzero(x < -tol)), tol=tol)
    for block in blocks:
        dose = np.asarray(block.map.matvec(x), dtype=np.float64)
        bounds = np.asarray(block.bounds, dtype=np.float64)
        beta = block.pvc.beta if block.pvc is not None else 0.0
        if block.sense.value == "upper":
            over_relaxed = dose - (1.0 + beta) * bounds
            over_original = dose - bounds
        else:
            over_relaxed = (1.0 - beta) * bounds - dose
            over_original = bounds - dose

        norms = block.map.row_norms()
        relaxed = 0
        for excess, norm in zip(over_relaxed, norms):
            if excess <= 0.0:
                continue
            if norm == 0.0 or excess / norm > tol:
                relaxed += 1

        allowed = None
        original = int(np.count_nonzero(over_original > tol))
        if block.pvc is not None:
            allowed = _allowed(block.pvc.alpha, block.rows)
        report.blocks.append(
            BlockCheck(
                name=block.name,
                sense=block.sense.value,
                rows=block.rows,
                relaxed_violations=relaxed,
                original_violations=original,
                allowed=allowed,
            )
        )
    return report
