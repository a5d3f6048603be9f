"""Polynomial evaluation and coefficient-trend validation."""

import numpy as np
import pytest

from pairweight import (
    COEFFICIENT_PRESETS,
    PolyCoefficients,
    make_rng,
    poly_deriv_eval,
    poly_eval,
    validate_coefficients,
)


def direct_sum(coeffs, s):
    """Independent oracle: evaluate the polynomial term by term."""
    return sum(c * s**i for i, c in enumerate(coeffs))


class TestPolyEval:
    def test_constant_term_at_zero(self):
        assert poly_eval((0.03, -0.3, 1.2), 0.0) == 0.03

    def test_sum_of_coefficients_at_one(self):
        # oracle: direct summation
        coeffs = (0.5, -0.7, 0.2)
        assert poly_eval(coeffs, 1.0) == pytest.approx(direct_sum(coeffs, 1.0), abs=1e-15)
        assert poly_eval(coeffs, 1.0) == pytest.approx(0.0, abs=1e-15)

    def test_hand_computed_value(self):
        # 0.2*0.64 - 0.7*0.8 + 0.5 = 0.068
        assert poly_eval((0.5, -0.7, 0.2), 0.8) == pytest.approx(0.068, abs=1e-15)

    def test_matches_direct_sum_on_random_draws(self):
        rng = make_rng(7)
        for _ in range(300):
            deg = int(rng.integers(0, 6))
            coeffs = tuple(rng.uniform(-10, 10, size=deg + 1))
            s = float(rng.uniform(-1, 1))
            assert poly_eval(coeffs, s) == pytest.approx(direct_sum(coeffs, s), rel=1e-12, abs=1e-12)

    def test_vectorized_matches_scalar(self):
        coeffs = (0.03, -0.3, 1.2)
        grid = np.linspace(-1, 1, 17)
        vec = poly_eval(coeffs, grid)
        assert np.allclose(vec, [poly_eval(coeffs, s) for s in grid], rtol=0, atol=0)

    def test_empty_coeffs_rejected(self):
        with pytest.raises(ValueError):
            poly_eval((), 0.5)


class TestPolyDerivEval:
    def test_linear_coefficient_at_zero(self):
        assert poly_deriv_eval((0.5, -0.7, 0.2), 0.0) == -0.7

    def test_constant_polynomial(self):
        assert poly_deriv_eval((3.25,), 0.5) == 0.0

    def test_hand_computed_value(self):
        # -0.3 + 2*1.2*0.75 = 1.5
        assert poly_deriv_eval((0.03, -0.3, 1.2), 0.75) == pytest.approx(1.5, abs=1e-15)

    def test_matches_central_finite_differences(self):
        # spec invariant: 1000 random (coeffs, s) draws, |s| <= 1, |coeffs| <= 10
        rng = make_rng(11)
        h = 1e-6
        for _ in range(1000):
            deg = int(rng.integers(0, 5))
            coeffs = tuple(rng.uniform(-10, 10, size=deg + 1))
            s = float(rng.uniform(-1, 1))
            fd = (poly_eval(coeffs, s + h) - poly_eval(coeffs, s - h)) / (2 * h)
            analytic = poly_deriv_eval(coeffs, s)
            assert analytic == pytest.approx(fd, rel=1e-6, abs=1e-6)


class TestValidateCoefficients:
    def test_default_preset_on_unit_interval(self):
        c = PolyCoefficients(
            pos=(0.5, -0.7, 0.2), neg=(0.03, -0.3, 1.2), sim_domain=(0.0, 1.0)
        )
        report = validate_coefficients(c)
        assert report.ok and not report.violations

    def test_linear_decreasing_increasing(self):
        report = validate_coefficients(PolyCoefficients(pos=(0.2, -1.0), neg=(0.0, 1.0)))
        assert report.ok

    def test_increasing_positive_rejected(self):
        report = validate_coefficients(PolyCoefficients(pos=(0.0, 1.0), neg=(0.0, 1.0)))
        assert not report.ok
        assert any("positive" in v for v in report.violations)

    def test_all_published_presets_accepted(self):
        for name, preset in COEFFICIENT_PRESETS.items():
            assert validate_coefficients(preset).ok, name

    def test_decreasing_negative_rejected(self):
        report = validate_coefficients(PolyCoefficients(pos=(0.2, -1.0), neg=(0.0, -1.0)))
        assert not report.ok
        assert any("negative" in v for v in report.violations)

    def test_negative_peaked_away_from_top_rejected(self):
        # Rises on the upper half, yet the zero score still carries the
        # largest weight, so the hardest negative is not the heaviest.
        report = validate_coefficients(
            PolyCoefficients(pos=(0.2, -1.0), neg=(1.0, 0.0, -0.245, 0.66, -0.6225, 0.2))
        )
        assert not report.ok
        assert any("maximal" in v for v in report.violations)

    def test_report_never_raises_on_structural_problems(self):
        bad = PolyCoefficients(pos=(0.2, -1.0), neg=(0.0, 1.0), mining_margin=-0.5)
        report = validate_coefficients(bad)
        assert not report.ok
        bad_domain = PolyCoefficients(pos=(0.2, -1.0), neg=(0.0, 1.0), sim_domain=(1.0, 0.0))
        assert not validate_coefficients(bad_domain).ok

    def test_ok_implies_trend_on_dense_sample(self):
        # ok => positive non-increasing everywhere; negative non-decreasing on
        # the upper half and maximal at the top, on a 10k-point sample.
        rng = make_rng(23)
        checked = 0
        while checked < 40:
            pos = tuple(rng.uniform(-1, 1, size=3))
            neg = tuple(rng.uniform(-1, 2, size=3))
            c = PolyCoefficients(pos=pos, neg=neg)
            if not validate_coefficients(c).ok:
                continue
            checked += 1
            lo, hi = c.sim_domain
            grid = np.linspace(lo, hi, 10_000)
            pos_vals = poly_eval(c.pos, grid)
            assert np.all(np.diff(pos_vals) <= 1e-9)
            upper = grid[grid >= (lo + hi) / 2]
            neg_upper = poly_eval(c.neg, upper)
            assert np.all(np.diff(neg_upper) >= -1e-9)
            neg_vals = poly_eval(c.neg, grid)
            assert neg_vals.max() <= poly_eval(c.neg, hi) + 1e-9


class TestRng:
    def test_same_seed_same_stream(self):
        a = make_rng(1234).uniform(size=10_000)
        b = make_rng(1234).uniform(size=10_000)
        assert np.array_equal(a, b)

    def test_different_seeds_differ(self):
        a = make_rng(1).uniform(size=100)
        b = make_rng(2).uniform(size=100)
        assert not np.array_equal(a, b)
