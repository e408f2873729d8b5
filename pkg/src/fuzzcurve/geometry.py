"""Curve analysis over parametric fuzzy numbers.

Everything here reduces to two numerical primitives, both hand-rolled so the
results are deterministic and dependency-free: an adaptive Simpson rule with
an explicit interval stack (optionally pre-split at supplied breakpoints,
which is how knot kinks and branch switches are kept away from the error
estimator) and a bracketed bisection root finder.

On top of those sit the analysis operations:

  curve_length          arc length of sigma, the integral of |sigma'|
  pointwise_skewness    the signed tangent angle gamma at one level
  sign_changes          all roots of gamma on [0, 1]
  gamma_arc_integral    the arc-length-weighted integral of gamma
  overall_skewness      that integral normalized by curve length
  alpha_mean            smallest level where gamma equals the overall value
  mean_value_triangle   the triangle sharing m and the tangent at alpha_mean
  level_dispersion      per-level distance from the mean triangle's cut
  overall_dispersion    its integral over [0, 1]

When both sides are piecewise linear the tangent is constant per segment, so
curve length and the weighted gamma integral are computed segment-exactly
instead of by quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    ParametricFN,
    PiecewiseLinear,
    PolarTriple,
    TriangularFN,
    _polar_of,
    polar_at,
    polar_to_triangle,
    tangent_at,
)

LENGTH_TOL = 1e-9
DISPERSION_TOL = 1e-8
ROOT_TOL = 1e-10
ALPHA_MEAN_TOL = 1e-12
DEDUP_TOL = 1e-8
_QUARTER_PI = math.pi / 4.0


class QuadratureError(ArithmeticError):
    """Adaptive refinement hit its depth limit before reaching tolerance.

    Carries the best estimate obtained and a bound on the unresolved error.
    """

    def __init__(self, estimate, error_bound):
        self.estimate = estimate
        self.error_bound = error_bound
        super().__init__(
            "quadrature did not converge: estimate %r, error bound %r"
            % (estimate, error_bound)
        )


class RootBracketError(ArithmeticError):
    """No sign-change bracket was found; carries the closest grid point."""

    def __init__(self, closest_alpha, residual):
        self.closest_alpha = closest_alpha
        self.residual = residual
        super().__init__(
            "no root bracket found; closest grid point alpha=%r (residual %r)"
            % (closest_alpha, residual)
        )


def adaptive_simpson(f, lo, hi, tol=LENGTH_TOL, breakpoints=(), max_depth=48):
    """Integrate f over [lo, hi] to absolute tolerance tol.

    The interval is pre-split at the interior breakpoints, each piece gets a
    tolerance share proportional to its width, and every piece is refined on
    an explicit stack until the Simpson error estimate |S2 - S1|/15 is within
    its share.  Raises QuadratureError if the depth limit is hit while the
    accumulated unresolved error still exceeds tol.
    """
    if hi <= lo:
        return 0.0
    cuts = [lo]
    for p in sorted(set(float(b) for b in breakpoints)):
        if lo < p < hi and p - cuts[-1] > 1e-13:
            cuts.append(p)
    cuts.append(hi)
    total = 0.0
    leftover = 0.0
    for a, b in zip(cuts, cuts[1:]):
        piece, unresolved = _refine_piece(f, a, b, tol * (b - a) / (hi - lo), max_depth)
        total += piece
        leftover += unresolved
    if leftover > tol:
        raise QuadratureError(total, leftover)
    return total


def _refine_piece(f, a, b, tol, max_depth):
    mid = 0.5 * (a + b)
    fa, fm, fb = f(a), f(mid), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    stack = [(a, b, fa, fm, fb, whole, tol, max_depth)]
    acc = 0.0
    unresolved = 0.0
    while stack:
        a, b, fa, fm, fb, whole, tol, depth = stack.pop()
        m = 0.5 * (a + b)
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        if abs(delta) <= 15.0 * tol or depth <= 0:
            acc += left + right + delta / 15.0
            if abs(delta) > 15.0 * tol:
                unresolved += abs(delta) / 15.0
        else:
            half = 0.5 * tol
            stack.append((a, m, fa, flm, fm, left, half, depth - 1))
            stack.append((m, b, fm, frm, fb, right, half, depth - 1))
    return acc, unresolved


def bisect(f, lo, hi, tol=ROOT_TOL, max_iter=200, f_lo=None, f_hi=None):
    """Root of f in [lo, hi] by bisection; endpoints must bracket a root."""
    f_lo = f(lo) if f_lo is None else f_lo
    if f_lo == 0.0:
        return lo
    f_hi = f(hi) if f_hi is None else f_hi
    if f_hi == 0.0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise ValueError("bisect endpoints do not bracket a root")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol or mid in (lo, hi):
            return mid
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _knot_breakpoints(fn):
    points = []
    for side in (fn.d, fn.u):
        if isinstance(side, PiecewiseLinear):
            points.extend(side.alphas[1:-1].tolist())
    return points


def _both_piecewise(fn):
    return isinstance(fn.d, PiecewiseLinear) and isinstance(fn.u, PiecewiseLinear)


def _merged_segments(fn):
    points = np.union1d(fn.d.alphas, fn.u.alphas)
    mids = 0.5 * (points[:-1] + points[1:])
    widths = np.diff(points)
    d_slopes = fn.d.slopes(mids)
    u_slopes = fn.u.slopes(mids)
    return mids, widths, d_slopes, u_slopes


def _speed(fn):
    def r(alpha):
        t = tangent_at(fn, alpha)
        return math.hypot(t.d_prime, t.u_prime)

    return r


def curve_length(fn):
    """Arc length of the curve: the integral of sqrt(d'^2 + u'^2) over [0, 1].

    Piecewise-linear sides are summed segment-exactly; analytic sides go
    through adaptive quadrature at tolerance 1e-9.
    """
    if _both_piecewise(fn):
        _, widths, d_slopes, u_slopes = _merged_segments(fn)
        return float(np.sum(np.hypot(d_slopes, u_slopes) * widths))
    return adaptive_simpson(_speed(fn), 0.0, 1.0, LENGTH_TOL, _knot_breakpoints(fn))


def pointwise_skewness(fn, alpha):
    """The signed tangent angle gamma(alpha), in [-pi/4, pi/4]."""
    return polar_at(fn, alpha).angle


def gamma_arc_integral(fn):
    """The arc-length-weighted skewness integral of gamma * |sigma'|."""
    if _both_piecewise(fn):
        mids, widths, d_slopes, u_slopes = _merged_segments(fn)
        total = 0.0
        for mid, width, dd, uu in zip(mids, widths, d_slopes, u_slopes):
            p = _polar_of(float(mid), float(dd), float(uu))
            total += p.angle * p.magnitude * float(width)
        return total

    def weighted(alpha):
        p = polar_at(fn, alpha)
        return p.angle * p.magnitude

    return adaptive_simpson(weighted, 0.0, 1.0, LENGTH_TOL, _knot_breakpoints(fn))


def overall_skewness(fn):
    """Arc-length-weighted mean of gamma; 0 for a crisp (zero-length) input."""
    length = curve_length(fn)
    if length == 0.0:
        return 0.0
    value = gamma_arc_integral(fn) / length
    return min(max(value, -_QUARTER_PI), _QUARTER_PI)


def sign_changes(fn, grid_n=1024):
    """Ascending roots where gamma changes sign, bisected to 1e-10.

    The grid scan uses grid_n intervals; consecutive nonzero values of
    opposite sign bracket a root.  An identically zero gamma reports no sign
    changes, and roots closer than 1e-8 are merged.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2, got %r" % (grid_n,))
    grid = np.linspace(0.0, 1.0, grid_n + 1)
    values = [pointwise_skewness(fn, float(a)) for a in grid]
    roots = []
    last_nonzero = None
    for i, value in enumerate(values):
        if value == 0.0:
            continue
        if last_nonzero is not None:
            j, prev = last_nonzero
            if (prev > 0) != (value > 0):
                roots.append(
                    bisect(
                        lambda a: pointwise_skewness(fn, a),
                        float(grid[j]),
                        float(grid[i]),
                        ROOT_TOL,
                        f_lo=prev,
                        f_hi=value,
                    )
                )
        last_nonzero = (i, value)
    deduped = []
    for root in sorted(roots):
        if not deduped or root - deduped[-1] > DEDUP_TOL:
            deduped.append(root)
    return deduped


def _alpha_mean_given(fn, target, grid_n):
    grid = np.linspace(0.0, 1.0, grid_n + 1)
    hit_tol = 1e-12 * (1.0 + abs(target))
    residual = lambda a: pointwise_skewness(fn, a) - target
    prev = residual(float(grid[0]))
    if abs(prev) <= hit_tol:
        return 0.0
    closest = (abs(prev), 0.0)
    for i in range(1, len(grid)):
        here = residual(float(grid[i]))
        if (prev > 0) != (here > 0) and abs(prev) > hit_tol:
            return bisect(
                residual,
                float(grid[i - 1]),
                float(grid[i]),
                ALPHA_MEAN_TOL,
                f_lo=prev,
                f_hi=here,
            )
        if abs(here) <= hit_tol:
            return float(grid[i])
        closest = min(closest, (abs(here), float(grid[i])))
        prev = here
    raise RootBracketError(closest[1], closest[0])


def alpha_mean(fn, grid_n=1024):
    """Smallest alpha with gamma(alpha) equal to the overall skewness.

    Existence comes from the integral mean value theorem (gamma is
    continuous); multiplicity is resolved by returning the smallest root, and
    a constant gamma therefore yields 0.
    """
    return _alpha_mean_given(fn, overall_skewness(fn), grid_n)


def mean_value_triangle(fn, grid_n=1024):
    """The triangle built from the middle and the tangent at alpha_mean."""
    if curve_length(fn) == 0.0:
        raise ValueError("mean value triangle needs a curve of positive length")
    at = alpha_mean(fn, grid_n)
    p = polar_at(fn, at)
    return polar_to_triangle(PolarTriple(fn.m, p.magnitude, p.angle))


@dataclass(frozen=True, slots=True)
class SkewnessReport:
    """One fuzzy number's skewness summary."""

    curve_length: float
    overall_skewness: float
    sign_changes: tuple
    alpha_mean: float
    mean_triangle: TriangularFN
    degenerate: bool


def analyze_skewness(fn, grid_n=1024):
    """The full skewness pipeline with intermediate values shared."""
    length = curve_length(fn)
    if length == 0.0:
        crisp = TriangularFN(fn.m, fn.m, fn.m)
        return SkewnessReport(0.0, 0.0, (), 0.0, crisp, True)
    value = gamma_arc_integral(fn) / length
    value = min(max(value, -_QUARTER_PI), _QUARTER_PI)
    roots = tuple(sign_changes(fn, grid_n))
    at = _alpha_mean_given(fn, value, grid_n)
    p = polar_at(fn, at)
    mean = polar_to_triangle(PolarTriple(fn.m, p.magnitude, p.angle))
    return SkewnessReport(length, value, roots, at, mean, False)


def _mean_cut(mean_triangle, alpha):
    under = mean_triangle.l + alpha * (mean_triangle.m - mean_triangle.l)
    over = mean_triangle.r - alpha * (mean_triangle.r - mean_triangle.m)
    return under, over


def level_dispersion(fn, alpha, mean_triangle=None):
    """Distance between the cut at alpha and the mean triangle's cut.

    The larger of the two endpoint distances, which is the Hausdorff distance
    of the nested intervals.
    """
    if mean_triangle is None:
        mean_triangle = mean_value_triangle(fn)
    under, over = _mean_cut(mean_triangle, alpha)
    d, u = fn.cut_at(alpha)
    return max(abs(u - over), abs(d - under))


def _dispersion_breakpoints(fn, mean_triangle, scan_n=256):
    """Kink locations of the dispersion integrand: branch switches and the
    zero crossings inside either absolute value."""
    grid = np.linspace(0.0, 1.0, scan_n + 1)
    d_vals, u_vals, _, _ = fn.sample(grid)
    under = mean_triangle.l + grid * (mean_triangle.m - mean_triangle.l)
    over = mean_triangle.r - grid * (mean_triangle.r - mean_triangle.m)
    f_upper = u_vals - over
    f_lower = d_vals - under
    switch = np.abs(f_upper) - np.abs(f_lower)

    def upper_at(a):
        _, u = fn.cut_at(a)
        return u - _mean_cut(mean_triangle, a)[1]

    def lower_at(a):
        d, _ = fn.cut_at(a)
        return d - _mean_cut(mean_triangle, a)[0]

    def switch_at(a):
        return abs(upper_at(a)) - abs(lower_at(a))

    points = []
    for samples, func in ((f_upper, upper_at), (f_lower, lower_at), (switch, switch_at)):
        for i in range(1, len(grid)):
            a, b = samples[i - 1], samples[i]
            if a == 0.0 or (a > 0) != (b > 0):
                try:
                    points.append(
                        bisect(func, float(grid[i - 1]), float(grid[i]), ROOT_TOL)
                    )
                except ValueError:
                    points.append(float(grid[i - 1]))
    return points


def overall_dispersion(fn, mean_triangle=None):
    """Integral of level_dispersion over [0, 1], tolerance 1e-8.

    The integrand has kinks where the max switches branches and where either
    endpoint distance crosses zero; those locations are found by a scan plus
    bisection and passed to the quadrature as breakpoints.
    """
    if mean_triangle is None:
        mean_triangle = mean_value_triangle(fn)
    breakpoints = _dispersion_breakpoints(fn, mean_triangle)
    breakpoints.extend(_knot_breakpoints(fn))
    return adaptive_simpson(
        lambda a: level_dispersion(fn, a, mean_triangle),
        0.0,
        1.0,
        DISPERSION_TOL,
        breakpoints,
    )


@dataclass(frozen=True, slots=True)
class DispersionReport:
    """Per-level dispersion curve plus its integral."""

    level_dispersion: object
    overall_dispersion: float


def analyze_dispersion(fn, mean_triangle=None):
    if mean_triangle is None:
        mean_triangle = mean_value_triangle(fn)
    total = overall_dispersion(fn, mean_triangle)
    curve = lambda alpha: level_dispersion(fn, alpha, mean_triangle)
    return DispersionReport(curve, total)
