"""Problem, solution and trace files.

Problem and solution files are JSON with a version tag. A block stores its
dose map either as dense `rows` or as `shape` plus `entries` triplets
`[row, col, value]`; dense storage is refused past DENSE_LIMIT
coefficients. Traces are CSV with one row per iteration. Floats are
written with repr, so identical runs give identical bytes.
"""

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from sacq.engine import TraceRecord
from sacq.errors import ProblemFileError, SacqError
from sacq.landweber import LinearMap
from sacq.operators import Sense
from sacq.rttp.problem import BlockSpec, PvcSpec

PROBLEM_VERSION = "sacq-problem/1"
SOLUTION_VERSION = "sacq-solution/1"
DENSE_LIMIT = 1_000_000

PROBLEM_FIELDS = {"version", "dimension", "blocks"}
BLOCK_FIELDS = {"name", "sense", "rows", "shape", "entries", "bounds", "alpha", "beta"}
SOLUTION_FIELDS = {"version", "dimension", "x"}
TRACE_PREFIXES = ("hs", "pvc", "lambda", "gamma", "stack")


def _load_json(path: str, what: str):
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"malformed {what}: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from exc


def _reject_unknown(data: dict, known: set, where: str) -> None:
    unknown = sorted(set(data) - known)
    if unknown:
        raise ProblemFileError(f"unknown fields: {', '.join(unknown)}", where)


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProblemFileError(f"expected a number, got {value!r}", where)
    value = float(value)
    if not math.isfinite(value):
        raise ProblemFileError("number is not finite", where)
    return value


def _integer(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ProblemFileError(f"expected an integer, got {value!r}", where)
    return value


def _vector(value, where: str, length: Optional[int] = None) -> np.ndarray:
    if not isinstance(value, list):
        raise ProblemFileError("expected a list of numbers", where)
    if length is not None and len(value) != length:
        raise ProblemFileError(f"expected {length} entries, got {len(value)}", where)
    return np.array([_number(v, f"{where}[{i}]") for i, v in enumerate(value)], dtype=np.float64)


def _parse_map(raw: dict, n: int, where: str) -> LinearMap:
    dense = "rows" in raw
    sparse = "shape" in raw or "entries" in raw
    if dense == sparse:
        raise ProblemFileError("give either 'rows' or 'shape' with 'entries'", where)
    if dense:
        rows = raw["rows"]
        if not isinstance(rows, list) or not rows:
            raise ProblemFileError("rows must be a nonempty list", f"{where}.rows")
        if len(rows) * n > DENSE_LIMIT:
            raise ProblemFileError(
                f"{len(rows)}x{n} dense map exceeds {DENSE_LIMIT} coefficients; use shape and entries",
                f"{where}.rows",
            )
        matrix = np.vstack([_vector(r, f"{where}.rows[{i}]", n) for i, r in enumerate(rows)])
        return LinearMap.from_dense(matrix)

    shape = raw.get("shape")
    if not isinstance(shape, list) or len(shape) != 2:
        raise ProblemFileError("shape must be [rows, cols]", f"{where}.shape")
    m = _integer(shape[0], f"{where}.shape[0]")
    cols = _integer(shape[1], f"{where}.shape[1]")
    if cols != n:
        raise ProblemFileError(f"expected {n} columns, got {cols}", f"{where}.shape[1]")
    if m < 1:
        raise ProblemFileError("a block needs at least one row", f"{where}.shape[0]")
    entries = raw.get("entries")
    if not isinstance(entries, list):
        raise ProblemFileError("entries must be a list of [row, col, value]", f"{where}.entries")
    triplets = []
    for k, entry in enumerate(entries):
        loc = f"{where}.entries[{k}]"
        if not isinstance(entry, list) or len(entry) != 3:
            raise ProblemFileError("expected [row, col, value]", loc)
        i = _integer(entry[0], f"{loc}[0]")
        j = _integer(entry[1], f"{loc}[1]")
        if not (0 <= i < m and 0 <= j < n):
            raise ProblemFileError(f"index ({i}, {j}) outside shape ({m}, {n})", loc)
        triplets.append((i, j, _number(entry[2], f"{loc}[2]")))
    return LinearMap.from_triplets((m, n), triplets)


def _parse_block(raw, n: int, where: str) -> BlockSpec:
    if not isinstance(raw, dict):
        raise ProblemFileError("block must be an object", where)
    _reject_unknown(raw, BLOCK_FIELDS, where)
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        raise ProblemFileError("name must be a nonempty string", f"{where}.name")
    try:
        sense = Sense.parse(raw.get("sense"))
    except ValueError as exc:
        raise ProblemFileError(str(exc), f"{where}.sense") from exc

    linear_map = _parse_map(raw, n, where)
    bounds = _vector(raw.get("bounds"), f"{where}.bounds", linear_map.rows)

    pvc = None
    if "alpha" in raw or "beta" in raw:
        if "alpha" not in raw or "beta" not in raw:
            raise ProblemFileError("give both alpha and beta or neither", where)
        try:
            pvc = PvcSpec(_number(raw["alpha"], f"{where}.alpha"), _number(raw["beta"], f"{where}.beta"))
        except SacqError as exc:
            if isinstance(exc, ProblemFileError):
                raise
            raise ProblemFileError(str(exc), where) from exc
    return BlockSpec(name, linear_map, sense, bounds, pvc)


def parse_problem(data) -> tuple:
    """Turn a decoded problem document into (dimension, blocks)."""
    if not isinstance(data, dict):
        raise ProblemFileError("problem must be a JSON object")
    _reject_unknown(data, PROBLEM_FIELDS, "problem")
    version = data.get("version")
    if version != PROBLEM_VERSION:
        raise ProblemFileError(f"unsupported version {version!r}, expected {PROBLEM_VERSION!r}", "version")
    n = _integer(data.get("dimension"), "dimension")
    if n < 1:
        raise ProblemFileError("dimension must be at least 1", "dimension")
    raw_blocks = data.get("blocks")
    if not isinstance(raw_blocks, list) or not raw_blocks:
        raise ProblemFileError("blocks must be a nonempty list", "blocks")
    blocks = [_parse_block(raw, n, f"blocks[{i}]") for i, raw in enumerate(raw_blocks)]
    names = [b.name for b in blocks]
    if len(set(names)) != len(names):
        raise ProblemFileError("block names must be unique", "blocks")
    return n, blocks


def read_problem(path: str) -> tuple:
    return parse_problem(_load_json(path, "problem file"))


def block_to_dict(block: BlockSpec) -> dict:
    out = {"name": block.name, "sense": block.sense.value}
    m, n = block.map.shape
    if not block.map.is_sparse and m * n <= DENSE_LIMIT:
        out["rows"] = block.map.to_dense().tolist()
    else:
        out["shape"] = [m, n]
        out["entries"] = [list(t) for t in block.map.triplets()]
    out["bounds"] = block.bounds.tolist()
    if block.pvc is not None:
        out["alpha"] = block.pvc.alpha
        out["beta"] = block.pvc.beta
    return out


def problem_to_dict(blocks: Sequence[BlockSpec]) -> dict:
    blocks = list(blocks)
    return {
        "version": PROBLEM_VERSION,
        "dimension": blocks[0].map.cols,
        "blocks": [block_to_dict(b) for b in blocks],
    }


def write_problem(blocks: Sequence[BlockSpec], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(blocks), fh)
        fh.write("\n")


def write_solution(x: np.ndarray, path: str) -> None:
    data = {"version": SOLUTION_VERSION, "dimension": int(x.shape[0]), "x": [float(v) for v in x]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh)
        fh.write("\n")


def read_solution(path: str, dimension: Optional[int] = None) -> np.ndarray:
    data = _load_json(path, "solution file")
    if not isinstance(data, dict):
        raise ProblemFileError("solution must be a JSON object")
    _reject_unknown(data, SOLUTION_FIELDS, "solution")
    if data.get("version") != SOLUTION_VERSION:
        raise ProblemFileError(f"unsupported version {data.get('version')!r}", "version")
    n = _integer(data.get("dimension"), "dimension")
    x = _vector(data.get("x"), "x", n)
    if dimension is not None and n != dimension:
        raise ProblemFileError(f"solution has dimension {n}, problem has {dimension}", "dimension")
    return x


def write_json(data: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


# -- traces -----------------------------------------------------------------

def trace_header(block_names: Sequence[str]) -> list:
    header = ["k", "proximity"]
    for prefix in TRACE_PREFIXES:
        header.extend(f"{prefix}:{name}" for name in block_names)
    return header


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_trace(records, block_names: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(trace_header(block_names))
    for r in records:
        row = [r.k, float(r.proximity)]
        row.extend(r.halfspace_violations)
        row.extend(r.pvc_excess)
        row.extend(float(v) for v in r.lambdas)
        row.extend(None if g is None else float(g) for g in r.gammas)
        row.extend(r.stacks)
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_trace(records, block_names: Sequence[str], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_trace(records, block_names))


@dataclass
class TraceTable:
    """A trace read back from CSV."""

    block_names: tuple
    records: list

    def __len__(self) -> int:
        return len(self.records)


def read_trace(path: str) -> TraceTable:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ProblemFileError("trace file is empty", path)
    header = rows[0]
    if header[:2] != ["k", "proximity"] or (len(header) - 2) % len(TRACE_PREFIXES):
        raise ProblemFileError("unrecognised trace header", "line 1")
    count = (len(header) - 2) // len(TRACE_PREFIXES)
    names = tuple(col.split(":", 1)[1] for col in header[2:2 + count])
    if header != trace_header(names):
        raise ProblemFileError("unrecognised trace header", "line 1")

    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        where = f"line {lineno}"
        if len(row) != len(header):
            raise ProblemFileError(f"expected {len(header)} columns, got {len(row)}", where)
        try:
            groups = [row[2 + g * count: 2 + (g + 1) * count] for g in range(len(TRACE_PREFIXES))]
            records.append(
                TraceRecord(
                    k=int(row[0]),
                    proximity=float(row[1]),
                    halfspace_violations=tuple(int(v) for v in groups[0]),
                    pvc_excess=tuple(int(v) for v in groups[1]),
                    lambdas=tuple(float(v) for v in groups[2]),
                    gammas=tuple(None if v == "" else float(v) for v in groups[3]),
                    stacks=tuple(int(v) for v in groups[4]),
                )
            )
        except ValueError as exc:
            raise ProblemFileError(f"malformed value: {exc}", where) from exc
    if not records:
        raise ProblemFileError("trace has no records", path)
    return TraceTable(names, records)
