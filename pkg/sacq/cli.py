"""CLI entry point for sacq.

Exit codes: 0 success, 1 not solved (MaxIters/Stalled/NonFinite) or check failed,
2 invalid input, 3 I/O failure.
"""

import contextlib
import os
import sys

import click
from rich.console import Console
from rich.markup import escape

from sacq import __version__
from sacq.check import DEFAULT_TOL, check_solution
from sacq.config import SolverConfig, load_config
from sacq.engine import SolveResult, SolveStatus, solve
from sacq.errors import NonFiniteIterateError, SacqError
from sacq.files import (
    read_problem,
    read_solution,
    read_trace,
    write_json,
    write_problem,
    write_solution,
    write_trace,
)
from sacq.log import configure_logging, get_logger
from sacq.report import (
    check_table,
    convergence_table,
    format_convergence_csv,
    format_dvh_csv,
    plan_table,
    summary_table,
)
from sacq.rttp import (
    BlockDims,
    InstanceDims,
    PhantomConfig,
    evaluate_plan,
    generate_feasible_instance,
    generate_phantom,
    translate_problem,
)

EXIT_OK = 0
EXIT_UNSOLVED = 1
EXIT_INVALID = 2
EXIT_IO = 3

console = Console()
err_console = Console(stderr=True)
log = get_logger(__name__)


def _fail(message: str, code: int):
    err_console.print(f"[red]{escape(message)}[/red]")
    sys.exit(code)


@contextlib.contextmanager
def _exit_codes():
    """Map library exceptions onto the documented exit codes."""
    try:
        yield
    except OSError as e:
        _fail(f"I/O error: {e}", EXIT_IO)
    except (SacqError, ValueError) as e:
        _fail(f"Invalid input: {e}", EXIT_INVALID)


def _ensure_dir(path: str) -> None:
    os.makedirs(path, exist_ok=True)


def verbose_option(f):
    def callback(ctx, param, value):
        configure_logging(value)
        return value

    return click.option(
        "--verbose", "-v", is_flag=True, expose_value=False, callback=callback,
        help="Debug logging on stderr",
    )(f)


@click.group()
@click.version_option(version=__version__, prog_name="sacq")
def cli():
    """sacq: string-averaging CQ solver for split feasibility with percentage-violation constraints."""


@cli.group()
def generate():
    """Write a synthetic problem file."""


@generate.command("phantom")
@click.option("--out", "-o", type=click.Path(dir_okay=False), required=True, help="Problem file to write")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--grid-size", type=int, default=16, show_default=True)
@click.option("--beamlets", type=int, default=8, show_default=True)
@click.option("--kernel-width", type=float, default=1.5, show_default=True)
@click.option("--bounds", "bounds_mode", type=click.Choice(["witness", "prescribed"]), default="witness",
              show_default=True, help="Fit bounds around a drawn witness or use prescribed doses")
@click.option("--witness", type=click.Path(dir_okay=False), help="Where to write the witness solution")
@verbose_option
def generate_phantom_cmd(out, seed, grid_size, beamlets, kernel_width, bounds_mode, witness):
    """A 2-D grid phantom with a target disk and an avoidance ring."""
    with _exit_codes():
        config = PhantomConfig(
            grid_size=grid_size, beamlets=beamlets, kernel_width=kernel_width, bounds=bounds_mode
        )
        blocks, geometry = generate_phantom(config, seed)
        write_problem(blocks, out)
        if geometry.witness is not None:
            witness_path = witness or _witness_path(out)
            write_solution(geometry.witness, witness_path)
            console.print(f"[dim]Witness written to {witness_path}[/dim]")
    rows = sum(b.rows for b in blocks)
    console.print(f"[green]Phantom problem written to {out}[/green] ({len(blocks)} blocks, {rows} rows)")


def _parse_block_dims(text: str) -> BlockDims:
    """name:sense:rows[:alpha:beta]"""
    parts = text.split(":")
    if len(parts) not in (3, 5):
        raise click.BadParameter(f"expected name:sense:rows[:alpha:beta], got {text!r}", param_hint="--block")
    try:
        rows = int(parts[2])
        alpha = float(parts[3]) if len(parts) == 5 else None
        beta = float(parts[4]) if len(parts) == 5 else None
    except ValueError:
        raise click.BadParameter(f"bad number in {text!r}", param_hint="--block") from None
    return BlockDims(parts[0], parts[1], rows, alpha, beta)


@generate.command("random-feasible")
@click.option("--out", "-o", type=click.Path(dir_okay=False), required=True, help="Problem file to write")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--n", "n", type=int, default=50, show_default=True, help="Number of unknowns")
@click.option("--block", "block_specs", multiple=True,
              help="name:sense:rows[:alpha:beta]; repeat for more blocks")
@click.option("--density", type=float, default=1.0, show_default=True)
@click.option("--loose", is_flag=True, help="Do not make every PVC tight at the witness")
@click.option("--witness", type=click.Path(dir_okay=False), help="Where to write the witness solution")
@verbose_option
def generate_random_cmd(out, seed, n, block_specs, density, loose, witness):
    """Random nonnegative blocks that a drawn witness satisfies."""
    specs = block_specs or ("avoid:upper:60", "target:lower:60")
    dims = InstanceDims(
        n=n, blocks=tuple(_parse_block_dims(s) for s in specs), density=density, tight=not loose
    )
    with _exit_codes():
        blocks, x_star = generate_feasible_instance(dims, seed)
        write_problem(blocks, out)
        witness_path = witness or _witness_path(out)
        write_solution(x_star, witness_path)
    console.print(f"[green]Random feasible problem written to {out}[/green]")
    console.print(f"[dim]Witness written to {witness_path}[/dim]")


def _witness_path(problem_path: str) -> str:
    root, _ = os.path.splitext(problem_path)
    return f"{root}.witness.json"


@cli.command("solve")
@click.option("--problem", "-p", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--config", "-c", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="Solver config (JSON or YAML); defaults apply without one")
@click.option("--out", "-o", type=click.Path(file_okay=False), required=True, help="Output directory")
@click.option("--seed", type=int, help="Override the config seed")
@verbose_option
def solve_cmd(problem, config_path, out, seed):
    """Solve a problem file and write solution.json, trace.csv and summary.json."""
    with _exit_codes():
        _, blocks = read_problem(problem)
        log.debug("read %d blocks from %s", len(blocks), problem)
        config = load_config(config_path) if config_path else SolverConfig()
        config = config.with_seed(seed)
        split = translate_problem(blocks, gamma_scale=config.gamma_scale)
        config.validate(split.operator_count)

    try:
        with console.status("[bold cyan]Solving...[/bold cyan]"):
            result = solve(split, config)
    except NonFiniteIterateError as e:
        # keep the last finite iterate and the trace up to it
        result = SolveResult(e.state.iterate, e.state, SolveStatus.NON_FINITE)
        _write_results(result, config, split, out)
        _fail(f"Solve aborted: {e}; last finite state written to {out}", EXIT_UNSOLVED)
    except (SacqError, ValueError) as e:
        _fail(f"Invalid input: {e}", EXIT_INVALID)

    summary = _write_results(result, config, split, out)
    console.print(summary_table(summary))
    console.print(f"[dim]Results written to {out}[/dim]")
    sys.exit(EXIT_OK if result.status is SolveStatus.SOLVED else EXIT_UNSOLVED)


def _write_results(result: SolveResult, config: SolverConfig, split, out: str) -> dict:
    """solution.json, trace.csv and summary.json under `out`."""
    summary = result.summary()
    summary["strategy"] = config.strategy
    summary["seed"] = config.seed
    summary["blocks"] = list(split.block_names)
    with _exit_codes():
        _ensure_dir(out)
        write_solution(result.solution, os.path.join(out, "solution.json"))
        write_trace(result.state.trace, split.block_names, os.path.join(out, "trace.csv"))
        write_json(summary, os.path.join(out, "summary.json"))
    return summary


@cli.command("check")
@click.option("--problem", "-p", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--solution", "-s", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--tol", type=float, default=DEFAULT_TOL, show_default=True,
              help="Distance beyond which a row counts as violated")
@verbose_option
def check_cmd(problem, solution, tol):
    """Verify a solution directly against the block inequalities."""
    with _exit_codes():
        n, blocks = read_problem(problem)
        x = read_solution(solution, n)
        result = check_solution(x, blocks, tol)

    console.print(check_table(result))
    if result.feasible:
        console.print("[green]All constraints hold.[/green]")
        sys.exit(EXIT_OK)
    failed = result.failed_blocks()
    if failed:
        console.print(f"[red]Violated blocks: {', '.join(failed)}[/red]")
    if result.negative_entries:
        console.print(f"[red]{result.negative_entries} negative entries in x[/red]")
    sys.exit(EXIT_UNSOLVED)


@cli.command("report")
@click.option("--trace", "-t", "trace_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "-o", type=click.Path(file_okay=False), required=True, help="Output directory")
@click.option("--problem", "-p", type=click.Path(exists=True, dir_okay=False),
              help="With --solution, also write DVH tables")
@click.option("--solution", "-s", type=click.Path(exists=True, dir_okay=False))
@verbose_option
def report_cmd(trace_path, out, problem, solution):
    """Write plot-ready CSV tables from a solve trace."""
    if (problem is None) != (solution is None):
        _fail("--problem and --solution go together", EXIT_INVALID)
    with _exit_codes():
        trace = read_trace(trace_path)
        evaluation = None
        if problem is not None:
            n, blocks = read_problem(problem)
            evaluation = evaluate_plan(read_solution(solution, n), blocks)

    with _exit_codes():
        _ensure_dir(out)
        with open(os.path.join(out, "convergence.csv"), "w", encoding="utf-8", newline="") as f:
            f.write(format_convergence_csv(trace))
        if evaluation is not None:
            with open(os.path.join(out, "dvh.csv"), "w", encoding="utf-8", newline="") as f:
                f.write(format_dvh_csv(evaluation))

    console.print(convergence_table(trace))
    if evaluation is not None:
        console.print(plan_table(evaluation))
    console.print(f"[green]Report written to {out}[/green] ({len(trace)} iterations)")


def main():
    cli()


if __name__ == "__main__":
    main()
