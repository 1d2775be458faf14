"""Grid-refinement study against the closed-form 1D profile."""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence

from .grid import GridSpec
from .membrane import error_vs_reference
from .oracle import UnsupportedProblemError, analytic_1d_constant
from .problem import BoundaryTrace, DynamicsField, ProblemSpec
from .solver import SolverConfig, solve

logger = logging.getLogger(__name__)

# guaranteed convergence order of the difference scheme in the max norm
RATE_EXPONENT = 2.0 / 7.0
MIN_RESOLUTIONS = 3
REFERENCES = ("analytic",)

ProblemFactory = Callable[[int], ProblemSpec]


@dataclass(frozen=True)
class StudyRow:
    n: int
    h: float
    err_u1: float
    err_u2: float
    err_v: float
    order: Optional[float]
    saturated: bool
    iterations: int
    converged: bool

    @property
    def err(self) -> float:
        return max(self.err_u1, self.err_u2, self.err_v)


@dataclass
class StudyResult:
    problem_name: str
    rows: List[StudyRow]
    fitted_m: float
    coarsest_m: float
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def regrid(problem: ProblemSpec) -> ProblemFactory:
    """Rebuild a constant-dynamics 1D problem with the same endpoint data on any n."""
    if problem.grid.dim != 1:
        raise UnsupportedProblemError("refinement studies run on 1D problems")
    f1, f2 = problem.f1.constant_value(), problem.f2.constant_value()
    if f1 is None or f2 is None:
        raise UnsupportedProblemError("refinement studies need constant dynamics")
    left, length = problem.grid.origin[0], problem.grid.extent[0]
    phi1, phi2 = problem.phi1.arc_values(), problem.phi2.arc_values()

    def build(n: int) -> ProblemSpec:
        grid = GridSpec.interval(left, left + length, n)
        return ProblemSpec(
            grid,
            DynamicsField.constant(grid, f1),
            DynamicsField.constant(grid, f2),
            BoundaryTrace.table(grid, phi1),
            BoundaryTrace.table(grid, phi2),
            name=problem.name,
        )

    return build


def _order(prev: StudyRow, err: float, h: float, floor: float) -> Optional[float]:
    if prev.err <= floor or err <= floor:
        return None
    return math.log(prev.err / err) / math.log(prev.h / h)


def run_study(
    factory: ProblemFactory,
    n_values: Sequence[int],
    config: Optional[SolverConfig] = None,
    reference: str = "analytic",
    saturation_floor: float = 1e-8,
    xtol: float = 1e-13,
) -> StudyResult:
    """Solve on each resolution, compare with the reference and check the h^(2/7) rate.

    A study passes when errors do not grow with n and every error stays
    below M_coarsest * h^(2/7). Errors at or below ``saturation_floor`` are
    rounding-limited and pass both checks.
    """
    if len(n_values) < MIN_RESOLUTIONS:
        raise ValueError(f"study requires ≥ {MIN_RESOLUTIONS} resolutions")
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError(f"resolutions must be strictly increasing, got {list(n_values)}")
    if reference not in REFERENCES:
        raise UnsupportedProblemError(f"unsupported reference {reference!r}; choose one of {REFERENCES}")
    config = replace(config or SolverConfig(), record_energy=False, record_jp=False, record_trace=False)

    rows: List[StudyRow] = []
    name = "custom"
    for n in n_values:
        problem = factory(n)
        name = problem.name
        report = solve(problem, config)
        errors = error_vs_reference(report.state, analytic_1d_constant(problem, xtol=xtol))
        h = problem.grid.h
        order = _order(rows[-1], errors.worst, h, saturation_floor) if rows else None
        rows.append(
            StudyRow(
                n=n,
                h=h,
                err_u1=errors.err_u1,
                err_u2=errors.err_u2,
                err_v=errors.err_v,
                order=order,
                saturated=errors.worst <= saturation_floor,
                iterations=report.iterations,
                converged=report.converged,
            )
        )
        logger.info(f"{name} n={n}: err={errors.worst:.3e} after {report.iterations} sweeps")

    scaled = [row.err / row.h**RATE_EXPONENT for row in rows]
    fitted_m, coarsest_m = max(scaled), scaled[0]
    failures = []
    for prev, row in zip(rows, rows[1:]):
        if row.err > prev.err and not row.saturated:
            failures.append(f"error grew from n={prev.n} to n={row.n}: {prev.err:.3e} -> {row.err:.3e}")
    for row in rows:
        if not row.converged:
            failures.append(f"solver did not converge at n={row.n}")
        elif not row.saturated and row.err > coarsest_m * row.h**RATE_EXPONENT:
            failures.append(f"n={row.n}: error {row.err:.3e} above M*h^(2/7)")
    return StudyResult(name, rows, fitted_m, coarsest_m, failures)
