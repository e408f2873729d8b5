"""Shared fuzzy-number fixtures for the test suite."""

import math
import random

from fuzzcurve.aggregate import ExpertInterval
from fuzzcurve.core import ParametricFN, PiecewiseLinear, TriangularFN, triangle_to_parametric
from fuzzcurve.expr import parse_expression

# The analytic worked example used throughout: left side rises as a squared
# cosine, right side falls as a quartic, both meeting at pi.
CURVED_D = "pi + (cos(1+1/3))^2 - (cos(alpha+1/3))^2"
CURVED_U = "-pi*alpha^4 + 2*pi"

# Frozen against a 30-digit independent computation (see the repo notes).
CURVED_CURVE_LENGTH = 3.50300985185632
CURVED_GAMMA_INTEGRAL = 1.76044951945218
CURVED_OVERALL_SKEWNESS = 0.502553402331792
CURVED_SIGN_CHANGE = 0.429987215552178
CURVED_ALPHA_MEAN = 0.634739209549746
CURVED_R_AT_MEAN = 3.34660588289220
CURVED_MEAN_LEFT_SIDE = 0.933999215088409
CURVED_MEAN_RIGHT_SIDE = 3.21362978602435
CURVED_LEVEL_DISPERSION_0 = 0.0963923005934144
CURVED_DISPERSION_SWITCH = 0.0482330951252822
CURVED_OVERALL_DISPERSION = 0.910506800686915


def curved_fn():
    return ParametricFN(parse_expression(CURVED_D), parse_expression(CURVED_U))


def analytic_fn(d_source, u_source):
    return ParametricFN(parse_expression(d_source), parse_expression(u_source))


def symmetric_analytic_fn():
    # u is the mirror 2m - d of the left side, so gamma vanishes identically.
    d = "1 + sin(alpha)"
    u = "2*(1 + sin(1)) - (1 + sin(alpha))"
    return analytic_fn(d, u)


def triangle(l, m, r):
    return triangle_to_parametric(TriangularFN(l, m, r))


def random_triangle(rng):
    m = rng.uniform(-50.0, 50.0)
    return TriangularFN(m - rng.uniform(0.0, 10.0), m, m + rng.uniform(0.0, 10.0))


def random_piecewise_fn(rng, max_knots=6):
    """A random monotone piecewise-linear fuzzy number."""
    m = rng.uniform(-10.0, 10.0)
    n_left = rng.randrange(2, max_knots)
    n_right = rng.randrange(2, max_knots)
    left_alphas = sorted(rng.uniform(0.05, 0.95) for _ in range(n_left - 2))
    right_alphas = sorted(rng.uniform(0.05, 0.95) for _ in range(n_right - 2))
    left_drops = [rng.uniform(0.0, 3.0) for _ in range(n_left - 1)]
    right_rises = [rng.uniform(0.0, 3.0) for _ in range(n_right - 1)]
    # build each side from the apex outward, then sort by alpha
    values = [m]
    for drop in left_drops:
        values.append(values[-1] - drop)
    alphas = [1.0] + left_alphas[::-1] + [0.0]
    d_knots = sorted(zip(alphas, values))
    values = [m]
    for rise in right_rises:
        values.append(values[-1] + rise)
    alphas = [1.0] + right_alphas[::-1] + [0.0]
    u_knots = sorted(zip(alphas, values))
    return ParametricFN(PiecewiseLinear(d_knots), PiecewiseLinear(u_knots), m=m)


def _map_side(side, f):
    return PiecewiseLinear([(a, f(v)) for a, v in side.knots])


def scaled_shifted(fn, c, delta):
    """The image of a piecewise fn under x -> c*x + delta with c > 0."""
    f = lambda v: c * v + delta
    return ParametricFN(_map_side(fn.d, f), _map_side(fn.u, f), m=f(fn.m))


def mirrored(fn, s):
    """Reflection of a piecewise fn through the point s: sides swap roles."""
    f = lambda v: 2.0 * s - v
    return ParametricFN(_map_side(fn.u, f), _map_side(fn.d, f), m=f(fn.m))


def symmetric_piecewise_fn(rng, max_knots=6):
    """A random piecewise fn whose right side mirrors its left."""
    m = rng.uniform(-8.0, 8.0)
    n = rng.randrange(2, max_knots)
    interior = sorted(rng.uniform(0.05, 0.95) for _ in range(n - 2))
    values = [m]
    for _ in range(n - 1):
        values.append(values[-1] - rng.uniform(0.2, 3.0))
    alphas = [1.0] + interior[::-1] + [0.0]
    d_knots = sorted(zip(alphas, values))
    u_knots = [(a, 2.0 * m - v) for a, v in d_knots]
    return ParametricFN(PiecewiseLinear(d_knots), PiecewiseLinear(u_knots), m=m)


def random_panel(rng, max_n=8):
    """Expert intervals drawn around a shared point, so they always overlap."""
    center = rng.uniform(-10.0, 10.0)
    n = rng.randrange(1, max_n)
    return [
        ExpertInterval(
            "s%d" % i, center - rng.uniform(0.0, 5.0), center + rng.uniform(0.0, 5.0)
        )
        for i in range(n)
    ]


def seeded(seed=20260819):
    return random.Random(seed)
