"""Dynamic string-averaging engine.

Each iteration picks a plan (Theta_k, w_k), runs every string of the plan
from the current iterate through the block operators R_i in string order,
and takes the weighted average of the string end-points:

    x^{k+1} = sum_{t in Theta_k} w_k(t) R_{t_q} ... R_{t_1}(x^k)
"""

import enum
import time
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from sacq.config import SolverConfig, thread_count
from sacq.errors import NonFiniteIterateError, StringIndexError
from sacq.log import get_logger
from sacq.operators import Operator, as_vector
from sacq.rttp.problem import BlockParams, SplitProblem
from sacq.strategies import StringPlan, next_plan

log = get_logger(__name__)


class SolveStatus(str, enum.Enum):
    SOLVED = "Solved"
    MAX_ITERS = "MaxIters"
    STALLED = "Stalled"
    NON_FINITE = "NonFinite"


@dataclass(frozen=True)
class TraceRecord:
    """One iteration as seen by trace consumers."""

    k: int
    proximity: float
    halfspace_violations: tuple
    pvc_excess: tuple
    lambdas: tuple
    gammas: tuple
    stacks: tuple


@dataclass
class SolverState:
    """Current iterate x^k, the counter k and the append-only trace."""

    iterate: np.ndarray
    iteration: int = 0
    initial_proximity: float = float("nan")
    trace: list = field(default_factory=list)

    def record(self, entry: TraceRecord) -> None:
        if self.trace and entry.k <= self.trace[-1].k:
            raise ValueError(f"trace must grow in k: {entry.k} after {self.trace[-1].k}")
        self.trace.append(entry)

    def snapshot(self) -> "SolverState":
        return SolverState(
            iterate=self.iterate.copy(),
            iteration=self.iteration,
            initial_proximity=self.initial_proximity,
            trace=list(self.trace),
        )


@dataclass
class SolveResult:
    solution: np.ndarray
    state: SolverState
    status: SolveStatus
    elapsed: float = 0.0

    @property
    def iterations(self) -> int:
        return self.state.iteration

    @property
    def final_proximity(self) -> float:
        if self.state.trace:
            return self.state.trace[-1].proximity
        return self.state.initial_proximity

    def summary(self) -> dict:
        return {
            "status": self.status.value,
            "iterations": self.iterations,
            "initial_proximity": self.state.initial_proximity,
            "final_proximity": self.final_proximity,
            "elapsed_seconds": round(self.elapsed, 3),
        }


def string_apply(t: Sequence[int], ops: Sequence[Operator], x) -> np.ndarray:
    """Z[t](x): apply R_{t_1} first, then R_{t_2}, and so on."""
    x = np.asarray(x, dtype=np.float64)
    for i in t:
        if not (0 <= i < len(ops)):
            raise StringIndexError(i, len(ops))
        x = ops[i].apply(x)
    return x


def gamma_apply(
    plan: StringPlan,
    ops: Sequence[Operator],
    x,
    executor: Optional[Executor] = None,
) -> np.ndarray:
    """Weighted average of the string end-points, summed in lexicographic string order."""
    x = as_vector(x)
    if executor is None:
        ends = [string_apply(t, ops, x) for t in plan.strings]
    else:
        ends = list(executor.map(lambda t: string_apply(t, ops, x), plan.strings))
    out = np.zeros_like(x)
    for w, end in zip(plan.weights, ends):
        out += w * end
    return out


def proximity(x, problem: SplitProblem) -> float:
    """Sum of squared distances of x (and each A_l x) to the problem's sets."""
    return problem.proximity(x)


def adaptive_update(state: SolverState, params: BlockParams, rule) -> BlockParams:
    """Adjust block parameters from the latest trace record.

    A block whose PVC excess exceeds its count of violated half-spaces gets
    lambda scaled by `rule.factor` (clamped at `rule.floor`) and its stacked
    projection count raised by `rule.stack_step` (clamped at
    `rule.stack_max`). gamma is left alone, so it stays inside (0, 1/L).
    """
    if not state.trace:
        return params
    last = state.trace[-1]
    updated = params
    for index, (hs, excess) in enumerate(zip(last.halfspace_violations, last.pvc_excess)):
        if excess <= hs:
            continue
        lam = max(rule.floor, params.lambdas[index] * rule.factor)
        stack = params.stacks[index]
        if params.gammas[index] is not None:
            stack = min(rule.stack_max, stack + rule.stack_step)
        if lam != params.lambdas[index] or stack != params.stacks[index]:
            log.info(
                "block %d: PVC excess %d > half-space violations %d, lambda %.4g -> %.4g, N_q %d -> %d",
                index, excess, hs, params.lambdas[index], lam, params.stacks[index], stack,
            )
            updated = updated.with_block(index, lam=lam, stack=stack)
    return updated


def solve(
    problem: SplitProblem,
    config: Optional[SolverConfig] = None,
    x0=None,
    callback: Optional[Callable[[TraceRecord, np.ndarray], None]] = None,
) -> SolveResult:
    """Run the string-averaging CQ iteration until solved, stalled or out of iterations.

    Raises NonFiniteIterateError (carrying the last finite state) if an
    iterate turns NaN or infinite.
    """
    config = config or SolverConfig()
    p = problem.operator_count
    constraints = config.validate(p)
    strategy = config.build_strategy()
    params = problem.default_params(
        lam=config.lambda_schedule.value, stack=config.stack, gamma_scale=config.gamma_scale
    )
    rule = config.lambda_schedule

    x = config.initial_point(problem.dimension) if x0 is None else as_vector(x0, problem.dimension, "x0")
    state = SolverState(iterate=x.copy())
    state.initial_proximity = problem.proximity(x)
    start = time.perf_counter()

    if state.initial_proximity <= config.tol:
        log.info("initial point already solves the problem")
        return SolveResult(x, state, SolveStatus.SOLVED, time.perf_counter() - start)

    workers = thread_count()
    executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    status = SolveStatus.MAX_ITERS
    try:
        for k in range(config.max_iter):
            plan = next_plan(strategy, k, p, constraints, state)
            ops = problem.operators(params, config.sweep)
            x_next = gamma_apply(plan, ops, x, executor)
            if not np.all(np.isfinite(x_next)):
                raise NonFiniteIterateError(
                    f"iterate {k + 1} is not finite", state=state.snapshot()
                )
            x = x_next
            state.iterate = x
            state.iteration = k + 1

            prox = problem.proximity(x)
            counts = problem.violation_counts(x)
            record = TraceRecord(
                k=k + 1,
                proximity=prox,
                halfspace_violations=counts.halfspace,
                pvc_excess=counts.pvc_excess,
                lambdas=params.lambdas,
                gammas=params.gammas,
                stacks=params.stacks,
            )
            state.record(record)
            log.debug("k=%d proximity=%.6e violations=%s", k + 1, prox, counts.halfspace)
            if callback is not None:
                callback(record, x.copy())

            if prox <= config.tol:
                status = SolveStatus.SOLVED
                break
            if _stalled(state.trace, config.stall_window, config.stall_eps):
                status = SolveStatus.STALLED
                break
            if rule.adaptive:
                params = adaptive_update(state, params, rule)
    finally:
        if executor is not None:
            executor.shutdown()

    result = SolveResult(x, state, status, time.perf_counter() - start)
    log.info("%s after %d iterations, proximity %.6e", status.value, result.iterations, result.final_proximity)
    return result


def _stalled(trace: list, window: int, eps: float) -> bool:
    """Relative proximity decrease over the last `window` iterations below `eps`."""
    if len(trace) <= window:
        return False
    old = trace[-1 - window].proximity
    new = trace[-1].proximity
    if old <= 0.0:
        return False
    return (old - new) / old < eps
