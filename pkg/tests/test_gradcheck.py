"""Gradient-check harness: samplers, error metric, self-test."""

import numpy as np
import pytest

from pairweight import LossSpec, make_rng, run_grad_check
from pairweight.gradcheck import (
    BOUNDARY_MARGIN,
    min_boundary_distance,
    relative_error,
    sample_safe_scores,
)


class TestRelativeError:
    def test_identical_arrays(self):
        a = np.array([1.0, -2.0, 0.0])
        assert relative_error(a, a.copy()) == 0.0

    def test_detects_discrepancy(self):
        a = np.array([1.0, 0.5])
        b = np.array([1.0, 0.6])
        assert relative_error(a, b) > 0.05

    def test_tiny_noise_on_zero_entries_tolerated(self):
        a = np.zeros(4)
        b = np.full(4, 1e-12)
        assert relative_error(a, b) < 1e-8


class TestBoundaryDistance:
    def test_reports_hinge_distance(self):
        # uniform off-diagonal 0.5 vs diagonal 0.55: hinge and mining
        # boundaries are all analytic, distance must be positive and small
        scores = np.full((3, 3), 0.5)
        np.fill_diagonal(scores, 0.55)
        spec = LossSpec(kind="triplet", triplet_margin=0.2)
        # hinge = 0.5 - 0.55 + 0.2 = 0.15; argmax gap is 0 (exact ties)
        assert min_boundary_distance(scores, spec) == pytest.approx(0.0, abs=1e-15)

    def test_safe_sampler_respects_margin(self):
        rng = make_rng(0)
        for kind in ("triplet", "avg_poly", "max_poly"):
            spec = LossSpec(kind=kind)
            for _ in range(20):
                scores = sample_safe_scores(rng, spec)
                assert min_boundary_distance(scores, spec) >= BOUNDARY_MARGIN


class TestHarness:
    @pytest.mark.parametrize("kind", ["triplet", "avg_poly", "max_poly"])
    def test_small_run_passes(self, kind):
        report = run_grad_check(kind, trials=8, seed=5)
        assert report.passed
        names = [c.name for c in report.components]
        assert names == ["similarity", "loss", "encoder"]
        for comp in report.components:
            assert comp.max_rel_err <= comp.tolerance

    def test_injected_bug_is_caught(self):
        report = run_grad_check("max_poly", trials=2, seed=5, inject_bug=True)
        assert not report.passed
