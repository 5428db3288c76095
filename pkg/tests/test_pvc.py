"""Tests for percentage-violation sets and their exact projection.

The projection is checked against an exhaustive search over which
violations to keep.
"""

import itertools
import os
import sys

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from sacq.errors import DimensionMismatchError, InvalidOperatorError
from sacq.operators import Sense
from sacq.pvc import (
    PvcProjector,
    PvcSet,
    count_violations,
    distance_sq,
    is_member,
    max_violations,
    project_pvc,
    translate_bounds,
)


def brute_force_distance_sq(y, bounds, sense, k):
    """Smallest clipping cost over every choice of at most k kept violations."""
    excess = Sense(sense).sign * (np.asarray(y) - np.asarray(bounds))
    violating = [i for i in range(len(y)) if excess[i] > 0.0]
    keep = min(k, len(violating))
    best = None
    for kept in itertools.combinations(violating, keep):
        cost = sum(float(excess[i]) ** 2 for i in violating if i not in kept)
        best = cost if best is None else min(best, cost)
    return best if best is not None else 0.0


# ─── Bounds and counts ──────────────────────────────────────────────

class TestTranslateBounds:
    def test_upper(self):
        assert np.allclose(translate_bounds([2.0, 4.0], 0.1, Sense.UPPER), [2.2, 4.4])

    def test_lower(self):
        assert np.allclose(translate_bounds([10.0], 0.25, Sense.LOWER), [7.5])

    def test_zero_bound(self):
        assert np.array_equal(translate_bounds([0.0], 0.5, "upper"), [0.0])

    def test_beta_range(self):
        """beta must lie strictly between 0 and 1."""
        for beta in (0.0, 1.0, -0.1):
            with pytest.raises(InvalidOperatorError):
                translate_bounds([1.0], beta, Sense.UPPER)


class TestMaxViolations:
    def test_floor(self):
        assert max_violations(0.2, 256) == 51
        assert max_violations(0.5, 4) == 2
        assert max_violations(0.0, 10) == 0
        assert max_violations(1.0, 7) == 7

    def test_product_just_below_integer(self):
        """0.29 * 100 evaluates a hair below 29 in floating point."""
        assert max_violations(0.29, 100) == 29

    def test_alpha_range(self):
        with pytest.raises(InvalidOperatorError):
            max_violations(1.5, 10)


class TestCountViolations:
    def test_upper(self):
        pvc = PvcSet(np.ones(3), Sense.UPPER, 1)
        report = count_violations([3.0, 0.5, 2.0], pvc)
        assert report.count == 2
        assert report.indices == (0, 2)
        assert report.magnitudes == (2.0, 1.0)

    def test_boundary_is_not_a_violation(self):
        pvc = PvcSet(np.ones(2), Sense.UPPER, 0)
        assert count_violations([1.0, 1.0], pvc).count == 0

    def test_lower(self):
        pvc = PvcSet(np.ones(2), Sense.LOWER, 0)
        report = count_violations([0.2, 0.9], pvc)
        assert report.count == 2
        assert np.allclose(report.magnitudes, (0.8, 0.1))

    def test_tolerance(self):
        """Violations no larger than tol are not counted."""
        pvc = PvcSet(np.ones(2), Sense.UPPER, 0)
        assert count_violations([1.0005, 1.5], pvc, tol=1e-3).count == 1

    def test_dimension_mismatch(self):
        pvc = PvcSet(np.ones(2), Sense.UPPER, 0)
        with pytest.raises(DimensionMismatchError):
            count_violations([1.0, 2.0, 3.0], pvc)


class TestMembership:
    def setup_method(self):
        self.pvc = PvcSet(np.ones(3), Sense.UPPER, 1)

    def test_one_violation_allowed(self):
        assert is_member([3.0, 0.0, 0.0], self.pvc)

    def test_two_violations_rejected(self):
        assert not is_member([3.0, 3.0, 0.0], self.pvc)

    def test_vacuous(self):
        """K = m admits every vector."""
        pvc = PvcSet(np.ones(3), Sense.UPPER, 3)
        assert pvc.is_vacuous
        assert is_member([9.0, 9.0, 9.0], pvc)

    def test_k_out_of_range(self):
        with pytest.raises(InvalidOperatorError):
            PvcSet(np.ones(3), Sense.UPPER, 4)


# ─── Exact projection ───────────────────────────────────────────────

class TestProjectPvc:
    def test_keeps_largest_violation(self):
        pvc = PvcSet(np.ones(3), Sense.UPPER, 1)
        assert np.array_equal(project_pvc([3.0, 2.0, 1.5], pvc), [3.0, 1.0, 1.0])

    def test_member_unchanged(self):
        pvc = PvcSet(np.ones(3), Sense.UPPER, 2)
        y = np.array([3.0, 2.0, 0.5])
        assert np.array_equal(project_pvc(y, pvc), y)

    def test_lower(self):
        pvc = PvcSet(np.ones(2), Sense.LOWER, 1)
        assert np.allclose(project_pvc([0.2, 0.9], pvc), [0.2, 1.0])

    def test_tie_keeps_lowest_index(self):
        """Equal violations: the lowest index survives."""
        pvc = PvcSet(np.ones(4), Sense.UPPER, 2)
        assert np.array_equal(project_pvc([2.0, 2.0, 2.0, 2.0], pvc), [2.0, 2.0, 1.0, 1.0])

    def test_k_zero_clips_everything(self):
        pvc = PvcSet(np.zeros(3), Sense.UPPER, 0)
        assert np.array_equal(project_pvc([1.0, -1.0, 2.0], pvc), [0.0, -1.0, 0.0])

    def test_operator_wrapper(self):
        pvc = PvcSet(np.ones(3), Sense.UPPER, 1)
        op = PvcProjector(pvc)
        assert op.dim == 3
        assert np.array_equal(op([3.0, 2.0, 1.5]), [3.0, 1.0, 1.0])

    def test_matches_brute_force(self):
        """Random instances of length <= 12 against exhaustive search."""
        rng = np.random.default_rng(2024)
        for trial in range(10_000):
            m = int(rng.integers(1, 13))
            bounds = rng.uniform(-1.0, 1.0, m)
            y = bounds + rng.normal(0.0, 1.0, m)
            if trial % 5 == 0:
                # force ties
                y = bounds + rng.choice([-0.5, 0.5, 1.0], m)
            sense = Sense.UPPER if trial % 2 else Sense.LOWER
            k = int(rng.integers(0, m + 1))
            pvc = PvcSet(bounds, sense, k)
            got = distance_sq(y, pvc)
            want = brute_force_distance_sq(y, bounds, sense.value, k)
            assert abs(got - want) <= 1e-12 * max(1.0, want)

    def test_projection_is_member_and_idempotent(self):
        rng = np.random.default_rng(5)
        for _ in range(500):
            m = int(rng.integers(1, 10))
            pvc = PvcSet(rng.random(m), Sense.UPPER, int(rng.integers(0, m + 1)))
            p = project_pvc(rng.normal(0.5, 1.0, m), pvc)
            assert is_member(p, pvc)
            assert np.array_equal(project_pvc(p, pvc), p)

    def test_distance_optimal_against_members(self):
        """No random member of the set is closer than the projection."""
        rng = np.random.default_rng(8)
        m, k = 8, 3
        bounds = np.ones(m)
        pvc = PvcSet(bounds, Sense.UPPER, k)
        y = rng.normal(1.0, 2.0, m)
        best = distance_sq(y, pvc)
        for _ in range(1000):
            z = bounds - rng.random(m)
            over = rng.choice(m, size=int(rng.integers(0, k + 1)), replace=False)
            z[over] = bounds[over] + rng.random(over.size) * 5
            assert is_member(z, pvc)
            assert best <= float(np.sum((y - z) ** 2)) + 1e-12

    def test_distance_monotone_in_k(self):
        """Allowing more violations never increases the distance."""
        rng = np.random.default_rng(13)
        for _ in range(100):
            m = 9
            bounds = rng.random(m)
            y = rng.normal(0.5, 1.0, m)
            distances = [distance_sq(y, PvcSet(bounds, Sense.LOWER, k)) for k in range(m + 1)]
            assert all(a >= b for a, b in zip(distances, distances[1:]))
