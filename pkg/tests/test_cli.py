"""End-to-end tests for the sacq command line."""

import csv
import json
import os
import sys

from click.testing import CliRunner

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np

from sacq import cli as cli_module
from sacq.cli import cli
from sacq.engine import SolverState
from sacq.errors import NonFiniteIterateError
from sacq.files import PROBLEM_VERSION, read_solution


def dump(path, data):
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


class TestCli:
    def setup_method(self):
        self.runner = CliRunner()

    def invoke(self, *args):
        return self.runner.invoke(cli, [str(a) for a in args])

    def random_problem(self, tmp_path):
        problem = tmp_path / "problem.json"
        result = self.invoke(
            "generate", "random-feasible", "--out", problem, "--seed", 3, "--n", 20,
            "--block", "avoid:upper:30", "--block", "target:lower:30",
        )
        assert result.exit_code == 0, result.output
        return problem

    # ─── generate ────────────────────────────────────────────────────

    def test_version(self):
        result = self.invoke("--version")
        assert result.exit_code == 0
        assert "sacq" in result.output

    def test_phantom_witness_checks(self, tmp_path):
        problem = tmp_path / "phantom.json"
        result = self.invoke("generate", "phantom", "--out", problem, "--grid-size", 12, "--seed", 2)
        assert result.exit_code == 0, result.output
        witness = tmp_path / "phantom.witness.json"
        assert witness.exists()
        result = self.invoke("check", "--problem", problem, "--solution", witness)
        assert result.exit_code == 0, result.output

    def test_phantom_bad_grid(self, tmp_path):
        result = self.invoke("generate", "phantom", "--out", tmp_path / "p.json", "--grid-size", -4)
        assert result.exit_code == 2
        assert "grid_size" in result.output

    def test_random_witness_path(self, tmp_path):
        problem = tmp_path / "p.json"
        witness = tmp_path / "w.json"
        result = self.invoke("generate", "random-feasible", "--out", problem, "--witness", witness, "--n", 5)
        assert result.exit_code == 0, result.output
        assert witness.exists()
        assert self.invoke("check", "-p", problem, "-s", witness).exit_code == 0

    def test_bad_block_spec(self, tmp_path):
        result = self.invoke("generate", "random-feasible", "--out", tmp_path / "p.json", "--block", "a:upper")
        assert result.exit_code == 2

    def test_bad_sense(self, tmp_path):
        result = self.invoke("generate", "random-feasible", "--out", tmp_path / "p.json", "--block", "a:sideways:4")
        assert result.exit_code == 2

    def test_zero_density_rejected(self, tmp_path):
        problem = tmp_path / "p.json"
        result = self.invoke("generate", "random-feasible", "--out", problem, "--density", 0)
        assert result.exit_code == 2
        assert "density" in result.output
        assert not problem.exists()

    def test_sparse_instance_is_solvable(self, tmp_path):
        """Whatever density the generator accepts, solve accepts the problem it writes."""
        problem = tmp_path / "p.json"
        result = self.invoke(
            "generate", "random-feasible", "--out", problem, "--n", 20, "--density", 0.01,
            "--block", "avoid:upper:30", "--block", "target:lower:30",
        )
        assert result.exit_code == 0, result.output
        out = tmp_path / "run"
        result = self.invoke("solve", "-p", problem, "-o", out)
        assert result.exit_code in (0, 1), result.output
        assert "Invalid input" not in result.output
        assert (out / "summary.json").exists()

    # ─── solve, check, report ────────────────────────────────────────

    def test_solve_check_report(self, tmp_path):
        """A convex random instance is solved, passes the check and reports every iteration."""
        problem = self.random_problem(tmp_path)
        out = tmp_path / "run"
        result = self.invoke("solve", "--problem", problem, "--out", out)
        assert result.exit_code == 0, result.output
        for name in ("solution.json", "trace.csv", "summary.json"):
            assert (out / name).exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["status"] == "Solved"
        assert summary["blocks"] == ["avoid", "target"]

        result = self.invoke("check", "--problem", problem, "--solution", out / "solution.json")
        assert result.exit_code == 0, result.output

        report = tmp_path / "report"
        result = self.invoke(
            "report", "--trace", out / "trace.csv", "--out", report,
            "--problem", problem, "--solution", out / "solution.json",
        )
        assert result.exit_code == 0, result.output
        with open(report / "convergence.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0][:2] == ["k", "proximity"]
        assert len(rows) - 1 == summary["iterations"]
        with open(report / "dvh.csv", newline="") as fh:
            dvh = list(csv.reader(fh))
        assert dvh[0] == ["block", "threshold", "fraction"]
        assert {row[0] for row in dvh[1:]} == {"avoid", "target"}

    def test_solve_deterministic(self, tmp_path):
        problem = self.random_problem(tmp_path)
        config = dump(tmp_path / "c.json", {"strategy": "random-dynamic", "max_iter": 30, "tol": 1e-30})
        for name in ("a", "b"):
            self.invoke("solve", "-p", problem, "-c", config, "-o", tmp_path / name, "--seed", 5)
        assert (tmp_path / "a" / "trace.csv").read_bytes() == (tmp_path / "b" / "trace.csv").read_bytes()

    def test_infeasible_exits_one(self, tmp_path):
        problem = dump(tmp_path / "p.json", {
            "version": PROBLEM_VERSION,
            "dimension": 1,
            "blocks": [
                {"name": "cap", "sense": "upper", "rows": [[1.0]], "bounds": [0.0]},
                {"name": "floor", "sense": "lower", "rows": [[1.0]], "bounds": [1.0]},
            ],
        })
        config = dump(tmp_path / "c.json", {"strategy": "simultaneous", "max_iter": 200})
        result = self.invoke("solve", "-p", problem, "-c", config, "-o", tmp_path / "run")
        assert result.exit_code == 1
        summary = json.loads((tmp_path / "run" / "summary.json").read_text())
        assert summary["status"] in ("Stalled", "MaxIters")

    def test_delta_too_large(self, tmp_path):
        """Two blocks give p = 3, so delta = 0.5 is inadmissible."""
        problem = self.random_problem(tmp_path)
        config = dump(tmp_path / "c.json", {"delta": 0.5})
        result = self.invoke("solve", "-p", problem, "-c", config, "-o", tmp_path / "run")
        assert result.exit_code == 2
        assert "delta" in result.output

    def test_unknown_config_field(self, tmp_path):
        problem = self.random_problem(tmp_path)
        config = dump(tmp_path / "c.json", {"turbo": True})
        result = self.invoke("solve", "-p", problem, "-c", config, "-o", tmp_path / "run")
        assert result.exit_code == 2
        assert "turbo" in result.output

    def test_malformed_problem(self, tmp_path):
        problem = tmp_path / "p.json"
        problem.write_text('{"version": ', encoding="utf-8")
        result = self.invoke("solve", "-p", problem, "-o", tmp_path / "run")
        assert result.exit_code == 2
        assert "column" in result.output

    def test_truncated_solution(self, tmp_path):
        problem = self.random_problem(tmp_path)
        solution = tmp_path / "s.json"
        solution.write_text('{"version": "sacq-solution/1", "dimension": 20, "x": [0.1, 0.2', encoding="utf-8")
        result = self.invoke("check", "-p", problem, "-s", solution)
        assert result.exit_code == 2

    def test_zero_plan_fails_check(self, tmp_path):
        """x = 0 underdoses the target and the check names it."""
        problem = self.random_problem(tmp_path)
        solution = dump(tmp_path / "s.json", {"version": "sacq-solution/1", "dimension": 20, "x": [0.0] * 20})
        result = self.invoke("check", "-p", problem, "-s", solution)
        assert result.exit_code == 1
        assert "target" in result.output

    def test_empty_trace(self, tmp_path):
        trace = tmp_path / "trace.csv"
        trace.write_text("", encoding="utf-8")
        result = self.invoke("report", "--trace", trace, "--out", tmp_path / "r")
        assert result.exit_code == 2

    def test_report_needs_both_files(self, tmp_path):
        problem = self.random_problem(tmp_path)
        out = tmp_path / "run"
        self.invoke("solve", "-p", problem, "-o", out)
        result = self.invoke("report", "-t", out / "trace.csv", "-o", tmp_path / "r", "-p", problem)
        assert result.exit_code == 2

    def test_out_is_a_file(self, tmp_path):
        problem = self.random_problem(tmp_path)
        blocker = tmp_path / "run"
        blocker.write_text("", encoding="utf-8")
        result = self.invoke("solve", "-p", problem, "-o", blocker)
        assert result.exit_code in (2, 3)

    def test_non_finite_writes_last_state(self, tmp_path, monkeypatch):
        """An aborted solve still leaves the last finite iterate behind."""
        problem = self.random_problem(tmp_path)
        last = np.full(20, 0.25)

        def blow_up(split, config):
            state = SolverState(iterate=last.copy(), iteration=0, initial_proximity=5.0)
            raise NonFiniteIterateError("iterate 1 is not finite", state=state)

        monkeypatch.setattr(cli_module, "solve", blow_up)
        out = tmp_path / "run"
        result = self.invoke("solve", "-p", problem, "-o", out)
        assert result.exit_code == 1
        assert np.array_equal(read_solution(str(out / "solution.json"), 20), last)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["status"] == "NonFinite"
        assert summary["iterations"] == 0
        assert (out / "trace.csv").read_text().startswith("k,proximity")
