"""Radiation-therapy style block problems built on the split solver."""

from sacq.rttp.evaluate import BlockEval, DvhCurve, PlanEval, compute_dvh, evaluate_plan
from sacq.rttp.generate import (
    AVOIDANCE,
    TARGET,
    BlockDims,
    Geometry,
    InstanceDims,
    PhantomConfig,
    StructureSpec,
    bounds_from_witness,
    generate_feasible_instance,
    generate_phantom,
)
from sacq.rttp.problem import (
    BlockParams,
    BlockSpec,
    PvcSpec,
    SplitProblem,
    ViolationCounts,
    translate_problem,
)

__all__ = [
    "AVOIDANCE",
    "TARGET",
    "BlockDims",
    "BlockEval",
    "BlockParams",
    "BlockSpec",
    "DvhCurve",
    "Geometry",
    "InstanceDims",
    "PhantomConfig",
    "PlanEval",
    "PvcSpec",
    "SplitProblem",
    "StructureSpec",
    "ViolationCounts",
    "bounds_from_witness",
    "compute_dvh",
    "evaluate_plan",
    "generate_feasible_instance",
    "generate_phantom",
    "translate_problem",
]
