"""Projection and relaxation operators on Euclidean space."""

from sacq.operators.base import (
    FEASIBILITY_TOL,
    Operator,
    Sense,
    apply,
    as_vector,
    cutter_residual,
)
from sacq.operators.combinators import (
    Composition,
    ConvexCombination,
    Relaxation,
    check_relaxation,
    relax,
)
from sacq.operators.projectors import (
    HalfSpace,
    HalfSpaceProjector,
    Identity,
    OrthantProjector,
    project_halfspace,
    project_orthant,
)

__all__ = [
    "FEASIBILITY_TOL",
    "Operator",
    "Sense",
    "apply",
    "as_vector",
    "cutter_residual",
    "Composition",
    "ConvexCombination",
    "Relaxation",
    "check_relaxation",
    "relax",
    "HalfSpace",
    "HalfSpaceProjector",
    "Identity",
    "OrthantProjector",
    "project_halfspace",
    "project_orthant",
]
