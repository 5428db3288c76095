"""Report generation: rich tables for the terminal, CSV tables for plotting."""

import csv
import io
from typing import Optional

from rich import box
from rich.table import Table

from sacq.check import CheckReport
from sacq.files import TraceTable
from sacq.rttp.evaluate import PlanEval

STATUS_COLORS = {
    "Solved": "green",
    "MaxIters": "yellow",
    "Stalled": "yellow",
    "NonFinite": "red",
}


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def format_convergence_csv(trace: TraceTable) -> str:
    """k, proximity and per-block violation columns, one row per iteration."""
    header = ["k", "proximity"]
    header += [f"halfspace_violations:{name}" for name in trace.block_names]
    header += [f"pvc_excess:{name}" for name in trace.block_names]
    rows = [header]
    for r in trace.records:
        rows.append(
            [r.k, repr(float(r.proximity))]
            + list(r.halfspace_violations)
            + list(r.pvc_excess)
        )
    return _csv(rows)


def format_dvh_csv(evaluation: PlanEval) -> str:
    rows = [["block", "threshold", "fraction"]]
    for block in evaluation.blocks:
        for threshold, fraction in block.dvh.rows():
            rows.append([block.name, repr(threshold), repr(fraction)])
    return _csv(rows)


def summary_table(summary: dict, title: str = "Solve Summary") -> Table:
    status = summary.get("status", "")
    color = STATUS_COLORS.get(status, "white")
    table = Table(title=title, box=box.ROUNDED, title_style="bold cyan")
    table.add_column("Property", style="bold")
    table.add_column("Value")
    table.add_row("Status", f"[{color}]{status}[/{color}]")
    table.add_row("Iterations", str(summary.get("iterations", 0)))
    table.add_row("Initial proximity", f"{summary.get('initial_proximity', float('nan')):.6e}")
    table.add_row("Final proximity", f"{summary.get('final_proximity', float('nan')):.6e}")
    if "elapsed_seconds" in summary:
        table.add_row("Time", f"{summary['elapsed_seconds']:.3f}s")
    return table


def check_table(report: CheckReport) -> Table:
    table = Table(
        title="Feasibility Check",
        box=box.ROUNDED,
        title_style="bold cyan",
        caption=f"tol={report.tol:g}, negative entries of x: {report.negative_entries}",
    )
    table.add_column("Block", style="bold")
    table.add_column("Sense")
    table.add_column("Rows", justify="right")
    table.add_column("Relaxed violations", justify="right")
    table.add_column("Original violations", justify="right")
    table.add_column("Allowed", justify="right")
    table.add_column("Result")
    for b in report.blocks:
        result = "[green]ok[/green]" if b.ok else "[red]violated[/red]"
        table.add_row(
            b.name,
            b.sense,
            str(b.rows),
            str(b.relaxed_violations),
            str(b.original_violations),
            "-" if b.allowed is None else str(b.allowed),
            result,
        )
    return table


def convergence_table(trace: TraceTable, max_rows: int = 20) -> Table:
    """The first and last iterations of a trace; the middle is elided."""
    table = Table(title="Convergence", box=box.SIMPLE_HEAVY, title_style="bold cyan")
    table.add_column("k", justify="right")
    table.add_column("Proximity", justify="right")
    for name in trace.block_names:
        table.add_column(f"{name} hs/pvc", justify="right")

    records = trace.records
    if len(records) > max_rows:
        half = max_rows // 2
        shown = records[:half] + [None] + records[-half:]
    else:
        shown = records
    for r in shown:
        if r is None:
            table.add_row("...", "...", *["..."] * len(trace.block_names))
            continue
        cells = [f"{h}/{p}" for h, p in zip(r.halfspace_violations, r.pvc_excess)]
        table.add_row(str(r.k), f"{r.proximity:.6e}", *cells)
    return table


def plan_table(evaluation: PlanEval, title: Optional[str] = None) -> Table:
    table = Table(title=title or "Plan Evaluation", box=box.ROUNDED, title_style="bold cyan")
    table.add_column("Block", style="bold")
    table.add_column("Min dose", justify="right")
    table.add_column("Mean dose", justify="right")
    table.add_column("Max dose", justify="right")
    table.add_column("PVC")
    for b in evaluation.blocks:
        if b.allowed_violations is None:
            pvc = "-"
        else:
            color = "green" if b.pvc_satisfied else "red"
            pvc = f"[{color}]{b.original_violations}/{b.allowed_violations}[/{color}]"
        table.add_row(b.name, f"{b.min_dose:.4g}", f"{b.mean_dose:.4g}", f"{b.max_dose:.4g}", pvc)
    return table
