"""Fuzzy numbers as parameterized plane curves.

A fuzzy number is handled through its side functions d and u on the
membership axis: the curve alpha -> (d(alpha), u(alpha)).  The package
measures skewness and dispersion from the tangent field of that curve,
aggregates expert interval panels into staircase fuzzy numbers, and
solves level-wise portfolio selection programs with fuzzy parameters.
"""

__version__ = "0.1.0"

from .aggregate import (
    ExpertInterval,
    OverlapError,
    StaircaseFN,
    aggregate,
    to_parametric,
)
from .core import (
    ParametricFN,
    PiecewiseLinear,
    PolarSample,
    PolarTriple,
    TangentSample,
    TriangularFN,
    f_transform,
    polar_at,
    polar_to_triangle,
    tangent_at,
    triangle_to_parametric,
    triangle_to_polar,
)
from .expr import (
    Dual,
    DualValue,
    ExprDomainError,
    ExprError,
    ExprSyntaxError,
    UnknownIdentifierError,
    eval_dual,
    parse_expression,
)
from .geometry import (
    DispersionReport,
    QuadratureError,
    RootBracketError,
    SkewnessReport,
    adaptive_simpson,
    alpha_mean,
    analyze_dispersion,
    analyze_skewness,
    bisect,
    curve_length,
    gamma_arc_integral,
    level_dispersion,
    mean_value_triangle,
    overall_dispersion,
    overall_skewness,
    pointwise_skewness,
    sign_changes,
)
from .portfolio import (
    CaseResult,
    FuzzyParamSet,
    LevelSolution,
    PortfolioProblem,
    crisp_fn,
    crisp_program_at,
    solve_levels,
)

__all__ = [
    "__version__",
    "CaseResult",
    "DispersionReport",
    "Dual",
    "DualValue",
    "ExpertInterval",
    "ExprDomainError",
    "ExprError",
    "ExprSyntaxError",
    "FuzzyParamSet",
    "LevelSolution",
    "OverlapError",
    "ParametricFN",
    "PiecewiseLinear",
    "PolarSample",
    "PolarTriple",
    "PortfolioProblem",
    "QuadratureError",
    "RootBracketError",
    "SkewnessReport",
    "StaircaseFN",
    "TangentSample",
    "TriangularFN",
    "UnknownIdentifierError",
    "adaptive_simpson",
    "aggregate",
    "alpha_mean",
    "analyze_dispersion",
    "analyze_skewness",
    "bisect",
    "crisp_fn",
    "crisp_program_at",
    "curve_length",
    "eval_dual",
    "f_transform",
    "gamma_arc_integral",
    "level_dispersion",
    "mean_value_triangle",
    "overall_dispersion",
    "overall_skewness",
    "parse_expression",
    "pointwise_skewness",
    "polar_at",
    "polar_to_triangle",
    "sign_changes",
    "solve_levels",
    "tangent_at",
    "to_parametric",
    "triangle_to_parametric",
    "triangle_to_polar",
]
