"""Polynomial pair-weight coefficients and their trend validation.

The polynomial losses weight each pair through two polynomials evaluated
at similarity scores: one for the positive pair (anchored at the matrix
diagonal) and one for mined negatives. A well-formed coefficient set
weights hard pairs more than easy ones: the positive polynomial must be
non-increasing across the whole score domain (an easy, high-scoring
positive earns a small weight), and the negative polynomial must be
non-decreasing on the upper half of the domain and attain its maximum at
the top score (the hardest negative earns the largest weight).

The negative-side check is deliberately restricted to the hard-negative
region: the published presets all dip slightly near the bottom of the
score range, so enforcing monotonicity everywhere would reject every one
of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

# Sign tolerance for the sampled-derivative checks; real violations are
# orders of magnitude larger, this only absorbs float noise.
TREND_TOL = 1e-9
_GRID = 1001


def poly_eval(coeffs: Sequence[float], s: Union[float, np.ndarray]):
    """Evaluate sum_i coeffs[i] * s**i by Horner's scheme.

    ``coeffs`` is ordered by ascending power. Works elementwise when ``s``
    is an array; returns a Python float for scalar input.
    """
    if len(coeffs) == 0:
        raise ValueError("coeffs must be non-empty")
    s_arr = np.asarray(s, dtype=np.float64)
    out = np.full_like(s_arr, float(coeffs[-1]))
    for k in range(len(coeffs) - 2, -1, -1):
        out = out * s_arr + coeffs[k]
    return float(out) if np.isscalar(s) or s_arr.ndim == 0 else out


def poly_deriv_eval(coeffs: Sequence[float], s: Union[float, np.ndarray]):
    """Evaluate the derivative sum_{i>=1} i * coeffs[i] * s**(i-1).

    Constant polynomials have derivative 0 everywhere.
    """
    if len(coeffs) == 0:
        raise ValueError("coeffs must be non-empty")
    if len(coeffs) == 1:
        s_arr = np.asarray(s, dtype=np.float64)
        zero = np.zeros_like(s_arr)
        return float(zero) if np.isscalar(s) or s_arr.ndim == 0 else zero
    deriv = [i * c for i, c in enumerate(coeffs)][1:]
    return poly_eval(deriv, s)


@dataclass(frozen=True)
class PolyCoefficients:
    """Hyperparameter bundle for the polynomial pair-weighting losses.

    ``pos`` holds the positive-pair polynomial coefficients in ascending
    powers (the constant term doubles as the positive hinge offset), and
    ``neg`` the negative-pair polynomial likewise. ``mining_margin`` is
    the relative-similarity margin used to select informative negatives,
    and ``sim_domain`` the closed score interval on which the weighting
    trend is validated.
    """

    pos: tuple = (0.5, -0.7, 0.2)
    neg: tuple = (0.03, -0.3, 1.2)
    mining_margin: float = 0.2
    sim_domain: tuple = (0.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "pos", tuple(float(c) for c in self.pos))
        object.__setattr__(self, "neg", tuple(float(c) for c in self.neg))
        object.__setattr__(self, "sim_domain", tuple(float(v) for v in self.sim_domain))

    @property
    def pos_degree(self) -> int:
        return len(self.pos) - 1

    @property
    def neg_degree(self) -> int:
        return len(self.neg) - 1


# Published coefficient presets, keyed by the benchmark they were tuned on.
COEFFICIENT_PRESETS = {
    "mscoco": PolyCoefficients(pos=(0.5, -0.7, 0.2), neg=(0.03, -0.3, 1.2)),
    "flickr30k": PolyCoefficients(pos=(0.6, -0.7, 0.2), neg=(0.03, -0.4, 0.9)),
    "activitynet": PolyCoefficients(pos=(0.5, -0.7, 0.2), neg=(1.0, -0.2, 1.7)),
    "msrvtt": PolyCoefficients(pos=(0.5, -0.7, 0.2), neg=(0.03, -0.3, 1.8)),
}

DEFAULT_COEFFICIENTS = COEFFICIENT_PRESETS["mscoco"]


@dataclass(frozen=True)
class CoefficientReport:
    """Outcome of ``validate_coefficients``: ok, or a list of violations."""

    ok: bool
    violations: tuple = field(default_factory=tuple)

    def __bool__(self) -> bool:
        return self.ok


def _structural_violations(c: PolyCoefficients) -> list:
    out = []
    if len(c.pos) == 0:
        out.append("positive coefficient list is empty")
    if len(c.neg) == 0:
        out.append("negative coefficient list is empty")
    for name, coeffs in (("positive", c.pos), ("negative", c.neg)):
        if coeffs and not all(np.isfinite(coeffs)):
            out.append(f"{name} coefficients contain non-finite values")
    if not np.isfinite(c.mining_margin) or c.mining_margin < 0:
        out.append(f"mining margin must be >= 0, got {c.mining_margin}")
    if len(c.sim_domain) != 2 or not all(np.isfinite(c.sim_domain)):
        out.append("sim_domain must be a finite (low, high) interval")
    elif not c.sim_domain[0] < c.sim_domain[1]:
        out.append(
            f"sim_domain must satisfy low < high, got {c.sim_domain[0]} >= {c.sim_domain[1]}"
        )
    return out


def validate_coefficients(c: PolyCoefficients) -> CoefficientReport:
    """Check the weighting-trend contract; never raises.

    The derivative of each polynomial is sampled at 1001 evenly spaced
    points of ``sim_domain`` (endpoints included). The positive polynomial
    must be non-increasing on the whole domain. The negative polynomial
    must be non-decreasing on the upper half of the domain and must reach
    its sampled maximum at the domain's upper end, so the hardest negative
    never carries less weight than an easier one.
    """
    violations = _structural_violations(c)
    if violations:
        return CoefficientReport(ok=False, violations=tuple(violations))

    lo, hi = c.sim_domain
    grid = np.linspace(lo, hi, _GRID)

    pos_deriv = poly_deriv_eval(c.pos, grid)
    if np.any(pos_deriv > TREND_TOL):
        s_bad = float(grid[int(np.argmax(pos_deriv))])
        violations.append(
            f"positive polynomial increasing on [{lo:g}, {hi:g}] (derivative > 0 near s={s_bad:.4g})"
        )

    upper = grid[grid >= (lo + hi) / 2.0]
    neg_deriv = poly_deriv_eval(c.neg, upper)
    if np.any(neg_deriv < -TREND_TOL):
        s_bad = float(upper[int(np.argmin(neg_deriv))])
        violations.append(
            f"negative polynomial decreasing on the hard-negative range "
            f"[{(lo + hi) / 2.0:g}, {hi:g}] (derivative < 0 near s={s_bad:.4g})"
        )

    neg_vals = poly_eval(c.neg, grid)
    if np.max(neg_vals) > neg_vals[-1] + TREND_TOL:
        s_bad = float(grid[int(np.argmax(neg_vals))])
        violations.append(
            f"negative polynomial not maximal at the top score s={hi:g} "
            f"(larger weight at s={s_bad:.4g})"
        )

    return CoefficientReport(ok=not violations, violations=tuple(violations))
