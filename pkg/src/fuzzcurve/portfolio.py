"""Level-wise fuzzy mean-variance-skewness portfolio programs.

Parameters (mean vector, covariance matrix, skewness vector) are fuzzy
numbers.  At each level alpha the fuzzy program is bracketed by two crisp
programs: the pessimistic one reads means and skewnesses at the lower cut
endpoint and covariances at the upper, the optimistic one the reverse.  Each
crisp program is solved by deterministic grid search over the box-constrained
simplex (step 0.01) followed by pairwise-transfer coordinate refinement down
to step 1e-5, so results are bit-reproducible and oracle-checkable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import TriangularFN, triangle_to_parametric

VARIANTS = ("min-variance", "max-mean", "max-skewness")
FEAS_TOL = 1e-9
PSD_TOL = -1e-9
GRID_STEPS = 100
REFINE_STEP = 1e-5


def crisp_fn(x):
    """A degenerate fuzzy number concentrated at x."""
    x = float(x)
    return triangle_to_parametric(TriangularFN(x, x, x))


class FuzzyParamSet:
    """Fuzzy market parameters: mean vector, covariance matrix, skew vector.

    The covariance matrix must be symmetric with cov[i][j] and cov[j][i] the
    same object, and its midpoint matrix positive semidefinite at every
    evaluated level (spot-checked at 0, 1/2, 1 on construction).
    """

    __slots__ = ("n_assets", "mu", "cov", "skew")

    def __init__(self, mu, cov, skew):
        mu = tuple(mu)
        skew = tuple(skew)
        cov = tuple(tuple(row) for row in cov)
        n = len(mu)
        if n == 0:
            raise ValueError("at least one asset is required")
        if len(skew) != n:
            raise ValueError("skew must have one entry per asset")
        if len(cov) != n or any(len(row) != n for row in cov):
            raise ValueError("cov must be an n by n matrix")
        for i in range(n):
            for j in range(i):
                if cov[i][j] is not cov[j][i]:
                    raise ValueError(
                        "cov must be symmetric with entries (%d, %d) and (%d, %d) "
                        "shared" % (i, j, j, i)
                    )
        self.n_assets = n
        self.mu = mu
        self.cov = cov
        self.skew = skew
        for alpha in (0.0, 0.5, 1.0):
            self.check_midpoint_psd(alpha)

    def _matrix_at(self, alpha, end):
        out = np.empty((self.n_assets, self.n_assets))
        for i in range(self.n_assets):
            for j in range(i + 1):
                out[i, j] = out[j, i] = _cut_end(self.cov[i][j], alpha, end)
        return out

    def check_midpoint_psd(self, alpha):
        smallest = float(np.linalg.eigvalsh(self._matrix_at(alpha, "mid"))[0])
        if smallest < PSD_TOL:
            raise ValueError(
                "midpoint covariance at alpha %r is not positive semidefinite "
                "(smallest eigenvalue %r)" % (alpha, smallest)
            )

    @classmethod
    def from_crisp(cls, mu_values, cov_values, skew_values):
        """Build a degenerate parameter set from plain numbers."""
        n = len(mu_values)
        cov = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(i + 1):
                cov[i][j] = cov[j][i] = crisp_fn(cov_values[i][j])
        return cls([crisp_fn(x) for x in mu_values], cov, [crisp_fn(x) for x in skew_values])


def _cut_end(fn, alpha, end):
    d, u = fn.cut_at(alpha)
    if end == "d":
        return d
    if end == "u":
        return u
    return 0.5 * (d + u)


@dataclass(frozen=True, slots=True)
class PortfolioProblem:
    """One program variant with its thresholds and per-asset weight boxes."""

    params: FuzzyParamSet
    mu_base: float
    var_cap: float
    skew_base: float
    box_constraints: tuple = None
    variant: str = "min-variance"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError("variant must be one of %s" % (VARIANTS,))
        boxes = self.box_constraints
        if boxes is None:
            boxes = ((0.0, 1.0),) * self.params.n_assets
        boxes = tuple((float(lo), float(hi)) for lo, hi in boxes)
        if len(boxes) != self.params.n_assets:
            raise ValueError("one box per asset is required")
        for lo, hi in boxes:
            if not 0.0 <= lo <= hi:
                raise ValueError("boxes need 0 <= lower <= upper, got [%r, %r]" % (lo, hi))
        if sum(lo for lo, _ in boxes) > 1.0 or sum(hi for _, hi in boxes) < 1.0:
            raise ValueError("boxes admit no point of the weight simplex")
        object.__setattr__(self, "box_constraints", boxes)
        object.__setattr__(self, "mu_base", float(self.mu_base))
        object.__setattr__(self, "var_cap", float(self.var_cap))
        object.__setattr__(self, "skew_base", float(self.skew_base))


@dataclass(frozen=True, slots=True)
class CaseResult:
    """One crisp endpoint program's outcome."""

    weights: tuple
    objective: float
    feasible: bool
    note: str = ""


@dataclass(frozen=True, slots=True)
class LevelSolution:
    """Pessimistic and optimistic program outcomes at one level."""

    alpha: float
    lower_case: CaseResult
    upper_case: CaseResult


def _grid_candidates(boxes, steps=GRID_STEPS):
    """Integer-composition simplex grid restricted to the boxes."""
    n = len(boxes)
    lows = [max(0, math.ceil(lo * steps - 1e-9)) for lo, _ in boxes]
    highs = [min(steps, math.floor(hi * steps + 1e-9)) for _, hi in boxes]
    out = []

    def rec(i, used, prefix):
        if i == n - 1:
            k = steps - used
            if lows[i] <= k <= highs[i]:
                out.append(prefix + (k,))
            return
        rest_low = sum(lows[i + 1 :])
        rest_high = sum(highs[i + 1 :])
        lo_k = max(lows[i], steps - used - rest_high)
        hi_k = min(highs[i], steps - used - rest_low)
        for k in range(lo_k, hi_k + 1):
            rec(i + 1, used + k, prefix + (k,))

    rec(0, 0, ())
    return np.array(out, dtype=float) / steps if out else np.empty((0, n))


def _waterfill(boxes):
    """A deterministic simplex point inside the boxes."""
    w = [lo for lo, _ in boxes]
    slack = 1.0 - sum(w)
    for i, (lo, hi) in enumerate(boxes):
        add = min(hi - lo, max(slack, 0.0))
        w[i] = lo + add
        slack -= add
    return np.array(w)


class _Program:
    """The crisp objective and constraints for one variant at fixed data."""

    def __init__(self, variant, m, s, C, mu_base, var_cap, skew_base):
        self.variant = variant
        self.m = m
        self.s = s
        self.C = C
        self.mu_base = mu_base
        self.var_cap = var_cap
        self.skew_base = skew_base
        self.maximize = variant != "min-variance"

    def evaluate(self, W):
        """Objectives and per-constraint violations for candidate rows W."""
        means = W @ self.m
        skews = W @ self.s
        variances = 0.5 * np.einsum("ki,ij,kj->k", W, self.C, W)
        if self.variant == "min-variance":
            objective = variances
            constraints = (
                ("mean floor", self.mu_base - means),
                ("skewness floor", self.skew_base - skews),
            )
        elif self.variant == "max-mean":
            objective = means
            constraints = (
                ("variance cap", variances - self.var_cap),
                ("skewness floor", self.skew_base - skews),
            )
        else:
            objective = skews
            constraints = (
                ("mean floor", self.mu_base - means),
                ("variance cap", variances - self.var_cap),
            )
        return objective, constraints

    def score_one(self, w):
        objective, constraints = self.evaluate(w[None, :])
        worst_name, worst = max(
            ((name, float(v[0])) for name, v in constraints), key=lambda nv: nv[1]
        )
        return float(objective[0]), worst, worst_name

    def better(self, a, b):
        return a > b if self.maximize else a < b


def _refine(program, w, boxes, minimize_violation):
    """Pairwise-transfer descent; returns the improved weight vector.

    With minimize_violation the target is the worst constraint violation,
    otherwise the objective restricted to feasible moves.
    """
    n = len(w)
    obj, viol, _ = program.score_one(w)
    current = viol if minimize_violation else obj
    delta = GRID_STEPS**-1 / 2.0
    while delta >= REFINE_STEP:
        best = None
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                cand = w.copy()
                cand[i] += delta
                cand[j] -= delta
                if cand[i] > boxes[i][1] + 1e-12 or cand[j] < boxes[j][0] - 1e-12:
                    continue
                obj, viol, _ = program.score_one(cand)
                if minimize_violation:
                    value = viol
                    if value < current and (best is None or value < best[0]):
                        best = (value, cand)
                else:
                    if viol > FEAS_TOL:
                        continue
                    value = obj
                    if program.better(value, current) and (
                        best is None or program.better(value, best[0])
                    ):
                        best = (value, cand)
        if best is None:
            delta *= 0.5
        else:
            current, w = best
            if minimize_violation and current <= FEAS_TOL:
                return w
    return w


def _solve_crisp(variant, m, s, C, mu_base, var_cap, skew_base, boxes):
    program = _Program(variant, m, s, C, mu_base, var_cap, skew_base)
    candidates = _grid_candidates(boxes)
    if candidates.size == 0:
        candidates = _waterfill(boxes)[None, :]
    objective, constraints = program.evaluate(candidates)
    violation = np.maximum.reduce([v for _, v in constraints])
    feasible = violation <= FEAS_TOL
    if np.any(feasible):
        masked = np.where(feasible, objective, -np.inf if program.maximize else np.inf)
        pick = int(np.argmax(masked) if program.maximize else np.argmin(masked))
        w = _refine(program, candidates[pick].copy(), boxes, minimize_violation=False)
        obj, _, _ = program.score_one(w)
        return w, obj, True, ""
    # no feasible grid point: descend on the violation, then on the objective
    pick = int(np.argmin(violation))
    w = _refine(program, candidates[pick].copy(), boxes, minimize_violation=True)
    obj, viol, worst_name = program.score_one(w)
    if viol <= FEAS_TOL:
        w = _refine(program, w, boxes, minimize_violation=False)
        obj, _, _ = program.score_one(w)
        return w, obj, True, ""
    return w, obj, False, "infeasible: most violated constraint is the %s" % worst_name


def crisp_program_at(problem, alpha, endpoint):
    """Solve the crisp program at one level and endpoint.

    The pessimistic (lower) endpoint reads mu and skew at the cut's lower end
    and covariances at the upper; the optimistic (upper) endpoint reverses
    that.  A non-PSD endpoint covariance is noted but still solved.
    """
    if endpoint not in ("lower", "upper"):
        raise ValueError("endpoint must be 'lower' or 'upper', got %r" % (endpoint,))
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1], got %r" % (alpha,))
    params = problem.params
    params.check_midpoint_psd(alpha)
    vector_end = "d" if endpoint == "lower" else "u"
    cov_end = "u" if endpoint == "lower" else "d"
    m = np.array([_cut_end(fn, alpha, vector_end) for fn in params.mu])
    s = np.array([_cut_end(fn, alpha, vector_end) for fn in params.skew])
    C = params._matrix_at(alpha, cov_end)
    note = ""
    smallest = float(np.linalg.eigvalsh(C)[0])
    if smallest < PSD_TOL:
        note = "endpoint covariance is not positive semidefinite"
    w, obj, feasible, solve_note = _solve_crisp(
        problem.variant,
        m,
        s,
        C,
        problem.mu_base,
        problem.var_cap,
        problem.skew_base,
        problem.box_constraints,
    )
    if solve_note:
        note = solve_note if not note else note + "; " + solve_note
    return CaseResult(tuple(float(x) for x in w), float(obj), feasible, note)


def solve_levels(problem, alphas):
    """One LevelSolution per alpha; a failing level is recorded, not fatal."""
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ValueError("at least one alpha level is required")
    for alpha in alphas:
        if not 0.0 <= alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1], got %r" % (alpha,))
    out = []
    for alpha in alphas:
        try:
            lower = crisp_program_at(problem, alpha, "lower")
            upper = crisp_program_at(problem, alpha, "upper")
        except (ValueError, ArithmeticError) as exc:
            failed = CaseResult((), float("nan"), False, "level failed: %s" % exc)
            lower = upper = failed
        out.append(LevelSolution(alpha, lower, upper))
    return out
