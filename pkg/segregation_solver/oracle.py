"""Independent references for validating the sweep solver.

Two oracles: a Gauss-Seidel coordinate minimizer of the discrete energy,
and the closed-form 1D profile for constant dynamics.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import bisect

from .functional import discrete_energy, split
from .grid import GridSpec, ScalarField, neighbor_sum
from .problem import ProblemSpec

logger = logging.getLogger(__name__)


class UnsupportedProblemError(ValueError):
    """The closed-form profile does not cover this problem."""


@dataclass(frozen=True, eq=False)
class OracleSolution:
    """Minimizer of J_h; ``v`` carries the boundary data g."""

    v: ScalarField
    energy: float
    passes: int
    optimal: bool
    method: str = "coordinate_descent"

    def densities(self) -> Tuple[ScalarField, ScalarField]:
        return split(self.v)


def _neighbor_plan(grid: GridSpec):
    """Flat C-order positions of each interior node and its neighbors, file order."""
    stride = grid.n + 1
    plan = []
    if grid.dim == 1:
        for i in range(1, grid.n):
            plan.append((i, (i - 1, i + 1)))
    else:
        for j in range(1, grid.n):
            for i in range(1, grid.n):
                pos = i * stride + j
                plan.append((pos, (pos - stride, pos + stride, pos - 1, pos + 1)))
    return plan


def _section_minimizer(avg: float, c1: float, c2: float) -> float:
    """argmin over s of s² - 2 avg s + 2 c1 (s∨0) + 2 c2 (-(s∧0)); the section scaled by h²/d."""
    candidates = (max(avg - c1, 0.0), min(avg + c2, 0.0), 0.0)
    best, best_value = 0.0, 0.0
    for s in candidates:
        value = s * s - 2.0 * avg * s + 2.0 * c1 * max(s, 0.0) + 2.0 * c2 * max(-s, 0.0)
        if value < best_value:
            best, best_value = s, value
    return best


def minimize_discrete_energy(
    problem: ProblemSpec,
    max_passes: int = 200000,
    energy_rtol: float = 1e-15,
    step_tol: float = 1e-14,
    initial: Optional[ScalarField] = None,
) -> OracleSolution:
    """Exact coordinate minimization of J_h, node by node in file order.

    Stops once a full pass both lowers the energy by less than
    ``energy_rtol * (1 + |J|)`` and moves no coordinate by more than
    ``step_tol``. When ``max_passes`` runs out the best iterate is returned
    with ``optimal`` False.
    """
    grid = problem.grid
    inside = (slice(1, -1),) * grid.dim
    divisor = 2.0 * grid.dim
    scale = grid.h * grid.h / divisor
    f1 = problem.f1.values.ravel()
    f2 = problem.f2.values.ravel()

    start = problem.g.values.copy()
    if initial is not None:
        start[inside] = initial.values[inside]
    w = start.ravel().tolist()
    plan = [(pos, nbrs, f1[pos] * scale, f2[pos] * scale) for pos, nbrs in _neighbor_plan(grid)]

    def energy_of(values) -> float:
        field = np.array(values).reshape(grid.shape)
        field[grid.boundary_mask()] = 0.0
        return discrete_energy(ScalarField(grid, field), problem).total

    energy = energy_of(w)
    passes = 0
    optimal = not plan
    while not optimal and passes < max_passes:
        passes += 1
        largest_step = 0.0
        for pos, nbrs, c1, c2 in plan:
            total = w[nbrs[0]]
            for m in nbrs[1:]:
                total += w[m]
            s = _section_minimizer(total / divisor, c1, c2)
            largest_step = max(largest_step, abs(s - w[pos]))
            w[pos] = s
        previous, energy = energy, energy_of(w)
        if previous - energy < energy_rtol * (1.0 + abs(energy)) and largest_step <= step_tol:
            optimal = True

    if not optimal:
        logger.warning(f"Coordinate descent hit max_passes={max_passes} before settling")
    logger.info(f"Oracle for {problem.name} finished after {passes} passes, J_h={energy:.12g}")
    return OracleSolution(ScalarField(grid, np.array(w).reshape(grid.shape)), energy, passes, optimal)


def coordinate_derivatives(v: ScalarField, problem: ProblemSpec) -> Tuple[np.ndarray, np.ndarray]:
    """One-sided directional derivatives of J_h along +e_a and -e_a at each interior node.

    ``v`` carries the boundary data. Both are >= 0 (up to rounding) exactly at
    coordinate-wise minimizers, which for this convex energy are the minimizers.
    """
    grid = problem.grid
    inside = (slice(1, -1),) * grid.dim
    h2 = grid.h * grid.h
    s = v.values[inside]
    smooth = (2.0 * grid.dim * s - neighbor_sum(v.values)) / h2
    f1 = problem.f1.values[inside]
    f2 = problem.f2.values[inside]
    plus = smooth + np.where(s >= 0.0, f1, -f2)
    minus = -smooth + np.where(s <= 0.0, f2, -f1)
    return plus, minus


@dataclass(frozen=True)
class AnalyticProfile:
    """Exact 1D difference profile v for constant f1, f2 and endpoint data.

    Positive phase on [L, a], zero on [a, b], negative phase on [b, R]; when
    the phases touch, a == b and ``slope`` is v'(a).
    """

    left: float
    right: float
    alpha: float
    beta: float
    f1: float
    f2: float
    a: float
    b: float
    slope: float

    @property
    def has_plateau(self) -> bool:
        return self.a < self.b

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        below = 0.5 * self.f1 * (x - self.a) ** 2 + self.slope * (x - self.a)
        above = -0.5 * self.f2 * (x - self.b) ** 2 + self.slope * (x - self.b)
        return np.where(x < self.a, below, np.where(x > self.b, above, 0.0))


def _constant(problem: ProblemSpec, which: str) -> float:
    value = getattr(problem, which).constant_value()
    if value is None:
        raise UnsupportedProblemError(f"closed form needs constant {which}")
    return value


def analytic_profile(problem: ProblemSpec, xtol: float = 1e-13) -> AnalyticProfile:
    grid = problem.grid
    if grid.dim != 1:
        raise UnsupportedProblemError("closed form exists only for 1D problems")
    f1, f2 = _constant(problem, "f1"), _constant(problem, "f2")
    n = grid.n
    left, right = grid.origin[0], grid.origin[0] + grid.extent[0]
    alpha, beta = problem.phi1.values[0], problem.phi2.values[n]
    if problem.phi2.values[0] != 0.0 or problem.phi1.values[n] != 0.0:
        raise UnsupportedProblemError("closed form needs phi2(L) = 0 and phi1(R) = 0")

    if alpha == 0.0:
        a = left
    elif f1 > 0.0:
        a = left + math.sqrt(2.0 * alpha / f1)
    else:
        a = math.inf
    if beta == 0.0:
        b = right
    elif f2 > 0.0:
        b = right - math.sqrt(2.0 * beta / f2)
    else:
        b = -math.inf

    if a <= b:
        return AnalyticProfile(left, right, alpha, beta, f1, f2, a, b, 0.0)

    def left_slope(c: float) -> float:
        if c <= left:
            return 0.0 if alpha == 0.0 else -math.inf
        return 0.5 * f1 * (c - left) - alpha / (c - left)

    def right_slope(c: float) -> float:
        if c >= right:
            return 0.0 if beta == 0.0 else -math.inf
        return 0.5 * f2 * (right - c) - beta / (right - c)

    def mismatch(c: float) -> float:
        # increasing in c
        return left_slope(c) - right_slope(c)

    if mismatch(left) >= 0.0:
        c = left
    elif mismatch(right) <= 0.0:
        c = right
    else:
        # step one ulp inside an endpoint whose slope is infinite
        lo = left if math.isfinite(mismatch(left)) else math.nextafter(left, right)
        hi = right if math.isfinite(mismatch(right)) else math.nextafter(right, left)
        c = bisect(mismatch, lo, hi, xtol=xtol)
    slope = left_slope(c) if c > left else right_slope(c)
    logger.debug(f"Phases touch at c={c:.15g} with slope {slope:.15g}")
    return AnalyticProfile(left, right, alpha, beta, f1, f2, c, c, slope)


def analytic_1d_constant(
    problem: ProblemSpec, grid: Optional[GridSpec] = None, xtol: float = 1e-13
) -> Tuple[ScalarField, ScalarField]:
    """Sample the closed-form (u1, u2) on ``grid`` (the problem grid by default)."""
    profile = analytic_profile(problem, xtol)
    grid = grid or problem.grid
    if grid.dim != 1:
        raise UnsupportedProblemError("closed form exists only for 1D problems")
    v = profile(grid.coordinates(0))
    v[0], v[-1] = profile.alpha, -profile.beta
    u1, u2 = split(ScalarField(grid, v))
    return u1, u2
