"""The representation lattice of a fuzzy number.

A fuzzy number is carried as its parametric representation: the left side
d(alpha) and right side u(alpha) of the alpha-cut [d(alpha), u(alpha)] for
alpha in [0, 1], meeting at the middle m = d(1) = u(1).  The pair traces the
plane curve sigma(alpha) = (d(alpha), u(alpha)); its derivative is the
tangent bundle.  Per alpha the tangent has a polar form: a magnitude
r(alpha) = |sigma'(alpha)| and a signed angle gamma(alpha) measured against
the anti-diagonal direction (1, -1), which is the pointwise angular skewness.
Triangular numbers are the linear special case and correspond one-to-one
with polar triples (m, magnitude, angle); both directions of that
correspondence are exact.

Sides are either an ExprAst (analytic definition) or a PiecewiseLinear knot
list.  Construction validates the boundary condition, monotonicity of both
sides (sampled on a uniform grid) and d <= u.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .expr import Dual, ExprAst

VALIDATION_GRID = 1025
BOUNDARY_TOL = 1e-9
MONOTONE_TOL = 1e-9

_QUARTER_PI = math.pi / 4.0


class PiecewiseLinear:
    """A piecewise-linear side function given by (alpha, value) knots.

    Knot alphas must be strictly increasing and span [0, 1].  The slope at a
    knot is the right-hand segment's (the left-hand one at alpha = 1).
    """

    __slots__ = ("alphas", "values_at_knots", "segment_slopes")

    def __init__(self, knots):
        if len(knots) < 2:
            raise ValueError("a piecewise-linear side needs at least 2 knots")
        alphas = np.array([k[0] for k in knots], dtype=float)
        values = np.array([k[1] for k in knots], dtype=float)
        if np.any(np.diff(alphas) <= 0):
            raise ValueError("knot alphas must be strictly increasing")
        if abs(alphas[0]) > 1e-12 or abs(alphas[-1] - 1.0) > 1e-12:
            raise ValueError("knots must span alpha in [0, 1]")
        alphas[0], alphas[-1] = 0.0, 1.0
        self.alphas = alphas
        self.values_at_knots = values
        self.segment_slopes = np.diff(values) / np.diff(alphas)

    @property
    def knots(self):
        return tuple(zip(self.alphas.tolist(), self.values_at_knots.tolist()))

    def _segment(self, alpha):
        idx = int(np.searchsorted(self.alphas, alpha, side="right")) - 1
        return min(max(idx, 0), len(self.segment_slopes) - 1)

    def value(self, alpha):
        return float(np.interp(alpha, self.alphas, self.values_at_knots))

    def slope(self, alpha):
        return float(self.segment_slopes[self._segment(alpha)])

    def values(self, alphas):
        return np.interp(alphas, self.alphas, self.values_at_knots)

    def slopes(self, alphas):
        idx = np.searchsorted(self.alphas, alphas, side="right") - 1
        idx = np.clip(idx, 0, len(self.segment_slopes) - 1)
        return self.segment_slopes[idx]

    def eval_many(self, alphas):
        alphas = np.asarray(alphas, dtype=float)
        return self.values(alphas), self.slopes(alphas)


def _side_eval(side, alpha):
    """(value, derivative) of one side at a scalar alpha."""
    if isinstance(side, PiecewiseLinear):
        return side.value(alpha), side.slope(alpha)
    out = side.root.eval(Dual(float(alpha), 1.0), side.source)
    return float(out.val), float(out.dot)


def _side_eval_many(side, alphas):
    return side.eval_many(alphas)


class ParametricFN:
    """A fuzzy number as its side functions d, u and middle m.

    d must be nondecreasing, u nonincreasing, d <= u, and both must reach m
    at alpha = 1.  Monotonicity and ordering are checked by sampling on a
    uniform grid (default 1025 points); the boundary within 1e-9.
    """

    __slots__ = ("d", "u", "m")

    def __init__(self, d, u, m=None, grid_n=VALIDATION_GRID):
        self.d = d
        self.u = u
        grid = np.linspace(0.0, 1.0, grid_n)
        d_vals, d_slopes = _side_eval_many(d, grid)
        u_vals, u_slopes = _side_eval_many(u, grid)
        if m is None:
            m = float(d_vals[-1])
        self.m = float(m)
        if abs(d_vals[-1] - self.m) > BOUNDARY_TOL or abs(u_vals[-1] - self.m) > BOUNDARY_TOL:
            raise ValueError(
                "sides must meet the middle at alpha=1: d(1)=%r, u(1)=%r, m=%r"
                % (float(d_vals[-1]), float(u_vals[-1]), self.m)
            )
        worst = int(np.argmin(d_slopes))
        if d_slopes[worst] < -MONOTONE_TOL:
            raise ValueError(
                "left side must be nondecreasing: d'(%g) = %g"
                % (grid[worst], d_slopes[worst])
            )
        worst = int(np.argmax(u_slopes))
        if u_slopes[worst] > MONOTONE_TOL:
            raise ValueError(
                "right side must be nonincreasing: u'(%g) = %g"
                % (grid[worst], u_slopes[worst])
            )
        gap = d_vals - u_vals
        worst = int(np.argmax(gap))
        # Each side may individually sit 1e-9 off the middle, so the cut
        # ordering check gets the combined slack.
        if gap[worst] > 2.0 * BOUNDARY_TOL:
            raise ValueError(
                "cut endpoints out of order at alpha=%g: d=%g > u=%g"
                % (grid[worst], d_vals[worst], u_vals[worst])
            )

    def cut_at(self, alpha):
        """The alpha-cut endpoints (d(alpha), u(alpha))."""
        return _side_eval(self.d, alpha)[0], _side_eval(self.u, alpha)[0]

    def sample(self, alphas):
        """(d values, u values, d derivatives, u derivatives) over a grid."""
        alphas = np.asarray(alphas, dtype=float)
        d_vals, d_slopes = _side_eval_many(self.d, alphas)
        u_vals, u_slopes = _side_eval_many(self.u, alphas)
        return d_vals, u_vals, d_slopes, u_slopes

    def __repr__(self):
        return "ParametricFN(m=%r)" % self.m


@dataclass(frozen=True, slots=True)
class TriangularFN:
    """The triple (l, m, r) of a triangular fuzzy number."""

    l: float
    m: float
    r: float

    def __post_init__(self):
        for name in ("l", "m", "r"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.l > self.m or self.m > self.r:
            raise ValueError("need l <= m <= r, got (%r, %r, %r)" % (self.l, self.m, self.r))


@dataclass(frozen=True, slots=True)
class TangentSample:
    """The tangent components (d'(alpha), u'(alpha)) at one level."""

    alpha: float
    d_prime: float
    u_prime: float

    def __post_init__(self):
        # Sides are validated to be monotone up to 1e-9 sampling noise, so
        # wrong-signed components within that tolerance are flattened to 0.
        if -MONOTONE_TOL <= self.d_prime < 0.0:
            object.__setattr__(self, "d_prime", 0.0)
        if 0.0 < self.u_prime <= MONOTONE_TOL:
            object.__setattr__(self, "u_prime", 0.0)


@dataclass(frozen=True, slots=True)
class PolarSample:
    """Tangent magnitude r(alpha) and signed angle gamma(alpha) at one level."""

    alpha: float
    magnitude: float
    angle: float


@dataclass(frozen=True, slots=True)
class PolarTriple:
    """Polar form (m, magnitude, angle) of a triangular fuzzy number."""

    m: float
    magnitude: float
    angle: float

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError("magnitude must be nonnegative, got %r" % (self.magnitude,))
        if abs(self.angle) > _QUARTER_PI + 1e-12:
            raise ValueError("angle must lie in [-pi/4, pi/4], got %r" % (self.angle,))
        if self.magnitude == 0.0 and self.angle != 0.0:
            object.__setattr__(self, "angle", 0.0)


def triangle_to_parametric(t):
    """Linear sides d(alpha) = l + alpha(m-l), u(alpha) = r - alpha(r-m)."""
    left = PiecewiseLinear([(0.0, t.l), (1.0, t.m)])
    right = PiecewiseLinear([(0.0, t.r), (1.0, t.m)])
    return ParametricFN(left, right, m=t.m)


def tangent_at(fn, alpha):
    """The tangent bundle sample (d'(alpha), u'(alpha))."""
    _, d_slope = _side_eval(fn.d, alpha)
    _, u_slope = _side_eval(fn.u, alpha)
    return TangentSample(float(alpha), d_slope, u_slope)


def _polar_of(alpha, d_prime, u_prime):
    d_prime = max(d_prime, 0.0)
    u_prime = min(u_prime, 0.0)
    magnitude = math.hypot(d_prime, u_prime)
    if magnitude == 0.0:
        return PolarSample(alpha, 0.0, 0.0)
    # Same value as sign * arccos((d' - u') / (sqrt(2) r)) with the sign set
    # by comparing |d'| and |u'|, but conditioned well at near-ties, where
    # that arccos argument sits flush against 1.
    angle = -math.atan2(d_prime + u_prime, d_prime - u_prime) + 0.0
    return PolarSample(alpha, magnitude, angle)


def polar_at(fn, alpha):
    """Polar sample of the tangent: magnitude and signed skewness angle.

    The angle is +arccos((d'-u') / (sqrt(2) r)) when |d'| < |u'|, its negative
    when |d'| > |u'|, and 0 when the magnitudes tie or the tangent vanishes.
    """
    t = tangent_at(fn, alpha)
    return _polar_of(t.alpha, t.d_prime, t.u_prime)


def triangle_to_polar(t):
    """Polar triple of a triangle; crisp numbers map to (m, 0, 0)."""
    a = t.m - t.l
    b = t.r - t.m
    magnitude = math.hypot(a, b)
    if magnitude == 0.0:
        return PolarTriple(t.m, 0.0, 0.0)
    # atan2 form of sign * arccos((r - l) / (sqrt(2) magnitude)), see _polar_of
    angle = -math.atan2(a - b, a + b) + 0.0
    return PolarTriple(t.m, magnitude, angle)


def polar_to_triangle(p):
    """Inverse of triangle_to_polar: exact up to rounding.

    The side lengths are m - l = magnitude * cos(angle + pi/4) and
    r - m = magnitude * sin(angle + pi/4); at the extreme angles one factor
    collapses to 0, which tiny-negative clamping keeps exact.
    """
    a = p.magnitude * math.cos(p.angle + _QUARTER_PI)
    b = p.magnitude * math.sin(p.angle + _QUARTER_PI)
    if -1e-12 < a < 0.0:
        a = 0.0
    if -1e-12 < b < 0.0:
        b = 0.0
    return TriangularFN(p.m - a, p.m, p.m + b)


def f_transform(x, y):
    """Basis change (x, y) -> ((x+y)/2, (y-x)/2).

    A similarity: every length scales by 1/sqrt(2) and angles between vectors
    are preserved exactly.
    """
    return (x + y) / 2.0, (y - x) / 2.0
