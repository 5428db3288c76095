"""Tests for problem, solution and trace files."""

import json
import os
import sys

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from sacq.config import SolverConfig
from sacq.engine import TraceRecord, solve
from sacq.errors import ProblemFileError
from sacq.files import (
    DENSE_LIMIT,
    PROBLEM_VERSION,
    block_to_dict,
    format_trace,
    parse_problem,
    read_problem,
    read_solution,
    read_trace,
    trace_header,
    write_problem,
    write_solution,
    write_trace,
)
from sacq.landweber import LinearMap
from sacq.rttp import BlockDims, BlockSpec, InstanceDims, PvcSpec, generate_feasible_instance, translate_problem


def write_text(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def small_problem():
    return {
        "version": PROBLEM_VERSION,
        "dimension": 2,
        "blocks": [
            {"name": "oar", "sense": "upper", "rows": [[1.0, 0.0], [0.5, 0.5]], "bounds": [1.0, 2.0],
             "alpha": 0.5, "beta": 0.1},
            {"name": "ptv", "sense": "lower", "shape": [1, 2], "entries": [[0, 1, 2.0]], "bounds": [0.5]},
        ],
    }


# ─── Problem files ──────────────────────────────────────────────────

class TestProblemFile:
    def test_parse(self):
        n, blocks = parse_problem(small_problem())
        assert n == 2
        assert [b.name for b in blocks] == ["oar", "ptv"]
        assert blocks[0].pvc == PvcSpec(0.5, 0.1)
        assert blocks[1].pvc is None
        assert blocks[1].map.is_sparse
        assert np.array_equal(blocks[1].map.to_dense(), [[0.0, 2.0]])

    def test_round_trip(self, tmp_path):
        """Dense and triplet blocks survive a write and read."""
        _, blocks = parse_problem(small_problem())
        path = str(tmp_path / "p.json")
        write_problem(blocks, path)
        n, again = read_problem(path)
        assert n == 2
        for a, b in zip(blocks, again):
            assert a.name == b.name
            assert a.sense is b.sense
            assert a.pvc == b.pvc
            assert a.map.is_sparse == b.map.is_sparse
            assert np.array_equal(a.map.to_dense(), b.map.to_dense())
            assert np.array_equal(a.bounds, b.bounds)

    def test_generated_instance_round_trip(self, tmp_path):
        blocks, _ = generate_feasible_instance(
            InstanceDims(n=6, blocks=(BlockDims("a", "upper", 5, 0.2, 0.1),)), seed=0
        )
        path = str(tmp_path / "p.json")
        write_problem(blocks, path)
        _, again = read_problem(path)
        assert np.array_equal(again[0].map.to_dense(), blocks[0].map.to_dense())

    def test_dense_storage_for_dense_maps(self):
        block = BlockSpec("b", LinearMap.from_dense([[1.0, 2.0]]), "upper", [1.0])
        data = block_to_dict(block)
        assert data["rows"] == [[1.0, 2.0]]
        assert "entries" not in data

    def test_unknown_fields_listed(self):
        data = small_problem()
        data["blocks"][0]["weight"] = 3
        data["blocks"][0]["colour"] = "red"
        with pytest.raises(ProblemFileError) as info:
            parse_problem(data)
        assert "colour" in str(info.value)
        assert "weight" in str(info.value)
        assert info.value.location == "blocks[0]"

    def test_malformed_json_location(self, tmp_path):
        path = write_text(tmp_path, "p.json", '{\n  "version": "sacq-problem/1",\n  "dimension": ,\n}')
        with pytest.raises(ProblemFileError) as info:
            read_problem(path)
        assert info.value.location.startswith("line 3 column")

    def test_wrong_version(self):
        data = small_problem()
        data["version"] = "sacq-problem/9"
        with pytest.raises(ProblemFileError):
            parse_problem(data)

    def test_both_storage_forms_rejected(self):
        data = small_problem()
        data["blocks"][1]["rows"] = [[0.0, 2.0]]
        with pytest.raises(ProblemFileError):
            parse_problem(data)

    def test_row_length_checked(self):
        data = small_problem()
        data["blocks"][0]["rows"][1] = [0.5]
        with pytest.raises(ProblemFileError) as info:
            parse_problem(data)
        assert info.value.location == "blocks[0].rows[1]"

    def test_bounds_length_checked(self):
        data = small_problem()
        data["blocks"][0]["bounds"] = [1.0]
        with pytest.raises(ProblemFileError):
            parse_problem(data)

    def test_entry_outside_shape(self):
        data = small_problem()
        data["blocks"][1]["entries"] = [[1, 0, 1.0]]
        with pytest.raises(ProblemFileError):
            parse_problem(data)

    def test_half_pvc_rejected(self):
        data = small_problem()
        del data["blocks"][0]["beta"]
        with pytest.raises(ProblemFileError):
            parse_problem(data)

    def test_pvc_range_reported_as_file_error(self):
        data = small_problem()
        data["blocks"][0]["beta"] = 1.5
        with pytest.raises(ProblemFileError):
            parse_problem(data)

    def test_duplicate_names(self):
        data = small_problem()
        data["blocks"][1]["name"] = "oar"
        with pytest.raises(ProblemFileError):
            parse_problem(data)

    def test_non_numeric_value(self):
        data = small_problem()
        data["blocks"][0]["bounds"] = [1.0, "two"]
        with pytest.raises(ProblemFileError) as info:
            parse_problem(data)
        assert info.value.location == "blocks[0].bounds[1]"

    def test_dense_limit(self):
        """A dense block past the coefficient limit is refused."""
        cols = DENSE_LIMIT // 2 + 1
        data = {
            "version": PROBLEM_VERSION,
            "dimension": cols,
            "blocks": [{"name": "b", "sense": "upper", "rows": [[], []], "bounds": [1.0, 1.0]}],
        }
        with pytest.raises(ProblemFileError, match="dense map exceeds"):
            parse_problem(data)


# ─── Solution files ─────────────────────────────────────────────────

class TestSolutionFile:
    def test_round_trip(self, tmp_path):
        x = np.array([0.1, 1.0 / 3.0, 2.5e-17])
        path = str(tmp_path / "s.json")
        write_solution(x, path)
        assert np.array_equal(read_solution(path, 3), x)

    def test_wrong_dimension(self, tmp_path):
        path = str(tmp_path / "s.json")
        write_solution(np.zeros(3), path)
        with pytest.raises(ProblemFileError):
            read_solution(path, 4)

    def test_truncated(self, tmp_path):
        path = write_text(tmp_path, "s.json", '{"version": "sacq-solution/1", "dimension": 3, "x": [0.0, 1.0')
        with pytest.raises(ProblemFileError):
            read_solution(path)

    def test_length_disagrees_with_dimension(self, tmp_path):
        path = write_text(tmp_path, "s.json", json.dumps({"version": "sacq-solution/1", "dimension": 3, "x": [1.0]}))
        with pytest.raises(ProblemFileError):
            read_solution(path)


# ─── Traces ─────────────────────────────────────────────────────────

class TestTrace:
    def setup_method(self):
        self.names = ("oar", "ptv")
        self.records = [
            TraceRecord(1, 0.5, (3, 1), (2, 0), (1.0, 1.0), (0.1, None), (1, 1)),
            TraceRecord(2, 1.0 / 3.0, (1, 0), (0, 0), (0.9, 1.0), (0.1, None), (2, 1)),
        ]

    def test_header(self):
        assert trace_header(self.names) == [
            "k", "proximity",
            "hs:oar", "hs:ptv",
            "pvc:oar", "pvc:ptv",
            "lambda:oar", "lambda:ptv",
            "gamma:oar", "gamma:ptv",
            "stack:oar", "stack:ptv",
        ]

    def test_round_trip(self, tmp_path):
        path = str(tmp_path / "trace.csv")
        write_trace(self.records, self.names, path)
        table = read_trace(path)
        assert table.block_names == self.names
        assert table.records == self.records
        assert len(table) == 2

    def test_floats_exact(self):
        text = format_trace(self.records, self.names)
        assert repr(1.0 / 3.0) in text
        assert ",," not in text.splitlines()[0]

    def test_solver_trace_byte_identical(self, tmp_path):
        """Writing, reading and writing again gives the same bytes."""
        blocks, _ = generate_feasible_instance(
            InstanceDims(n=8, blocks=(BlockDims("a", "upper", 12, 0.25, 0.1), BlockDims("t", "lower", 12))),
            seed=1,
        )
        problem = translate_problem(blocks)
        result = solve(problem, SolverConfig(max_iter=10, tol=1e-30))
        first = tmp_path / "a.csv"
        write_trace(result.state.trace, problem.block_names, str(first))
        table = read_trace(str(first))
        second = tmp_path / "b.csv"
        write_trace(table.records, table.block_names, str(second))
        assert first.read_bytes() == second.read_bytes()

    def test_empty_file(self, tmp_path):
        path = write_text(tmp_path, "t.csv", "")
        with pytest.raises(ProblemFileError):
            read_trace(path)

    def test_header_only(self, tmp_path):
        path = write_text(tmp_path, "t.csv", ",".join(trace_header(self.names)) + "\n")
        with pytest.raises(ProblemFileError, match="no records"):
            read_trace(path)

    def test_bad_header(self, tmp_path):
        path = write_text(tmp_path, "t.csv", "iteration,value\n1,2\n")
        with pytest.raises(ProblemFileError):
            read_trace(path)

    def test_bad_row_location(self, tmp_path):
        text = format_trace(self.records, self.names).replace("0.5,", "abc,", 1)
        path = write_text(tmp_path, "t.csv", text)
        with pytest.raises(ProblemFileError) as info:
            read_trace(path)
        assert info.value.location == "line 2"
