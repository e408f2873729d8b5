"""Aggregation of expert interval estimates into staircase fuzzy numbers.

With n overlapping estimates, the level at membership k/n is the set of
points covered by at least k of them, which for overlapping intervals is
exactly [k-th smallest lower bound, k-th largest upper bound].  The apex,
the midpoint of the common intersection, is inserted at membership 1, and
linear joining of the level endpoints turns the staircase into a
ParametricFN whose sides are piecewise linear.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import ParametricFN, PiecewiseLinear


class OverlapError(ValueError):
    """The estimates share no common point; carries one offending pair."""

    def __init__(self, first, second):
        self.first = first
        self.second = second
        super().__init__(
            "estimates %r and %r do not overlap, so the panel has no common "
            "intersection" % (first, second)
        )


@dataclass(frozen=True, slots=True)
class ExpertInterval:
    """One source's interval estimate."""

    source_id: str
    lower: float
    upper: float

    def __post_init__(self):
        object.__setattr__(self, "source_id", str(self.source_id))
        object.__setattr__(self, "lower", float(self.lower))
        object.__setattr__(self, "upper", float(self.upper))
        if not self.lower <= self.upper:
            raise ValueError(
                "estimate %r has lower %r above upper %r"
                % (self.source_id, self.lower, self.upper)
            )


@dataclass(frozen=True, slots=True)
class StaircaseFN:
    """A staircase membership function plus its inserted apex.

    levels holds (membership, (lower, upper)) pairs with memberships
    ascending to 1 and intervals nested; apex lies inside the top interval.
    """

    levels: tuple
    apex: float

    def __post_init__(self):
        levels = tuple((float(mem), (float(lo), float(up))) for mem, (lo, up) in self.levels)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "apex", float(self.apex))
        if not levels:
            raise ValueError("a staircase needs at least one level")
        prev_mem = 0.0
        prev_lo, prev_up = -float("inf"), float("inf")
        for mem, (lo, up) in levels:
            if not prev_mem < mem <= 1.0:
                raise ValueError("memberships must ascend within (0, 1]")
            if lo > up:
                raise ValueError("level at membership %r has lower above upper" % (mem,))
            if lo < prev_lo or up > prev_up:
                raise ValueError("levels must be nested as membership rises")
            prev_mem, prev_lo, prev_up = mem, lo, up
        if levels[-1][0] != 1.0:
            raise ValueError("the top level must sit at membership 1")
        top_lo, top_up = levels[-1][1]
        if not top_lo <= self.apex <= top_up:
            raise ValueError("apex %r lies outside the top level" % (self.apex,))

    def membership(self, x):
        """Staircase membership at x: the deepest level containing it."""
        deepest = 0.0
        for mem, (lo, up) in self.levels:
            if lo <= x <= up:
                deepest = mem
            else:
                break
        return deepest


def aggregate(estimates):
    """Combine expert intervals into a StaircaseFN.

    Requires at least one estimate and a nonempty common intersection;
    otherwise an OverlapError names a disjoint pair.
    """
    estimates = list(estimates)
    if not estimates:
        raise ValueError("aggregate needs at least one estimate")
    n = len(estimates)
    widest_lower = max(estimates, key=lambda e: e.lower)
    narrowest_upper = min(estimates, key=lambda e: e.upper)
    if widest_lower.lower > narrowest_upper.upper:
        raise OverlapError(widest_lower.source_id, narrowest_upper.source_id)
    lowers = sorted(e.lower for e in estimates)
    uppers = sorted((e.upper for e in estimates), reverse=True)
    levels = tuple(((k + 1) / n, (lowers[k], uppers[k])) for k in range(n))
    apex = 0.5 * (widest_lower.lower + narrowest_upper.upper)
    return StaircaseFN(levels, apex)


def to_parametric(s):
    """Linear joining of the staircase levels, with the apex at alpha 1.

    Each side gets a knot per level below the top, the apex supersedes the
    top level's endpoint, and the lowest segment extends flat to alpha 0 so
    the support stays the union of the estimates.
    """
    below_top = s.levels[:-1]
    d_knots = [(0.0, s.levels[0][1][0])]
    u_knots = [(0.0, s.levels[0][1][1])]
    for mem, (lo, up) in below_top:
        d_knots.append((mem, lo))
        u_knots.append((mem, up))
    d_knots.append((1.0, s.apex))
    u_knots.append((1.0, s.apex))
    return ParametricFN(PiecewiseLinear(d_knots), PiecewiseLinear(u_knots), m=s.apex)
