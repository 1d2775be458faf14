from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from .grid import ContractViolation, GridSpec, ScalarField, laplacian_values
from .problem import ProblemSpec


@dataclass(frozen=True)
class EnergyBreakdown:
    """Terms of J_h(v) = -1/2 (L_h v, v) + (f1, v∨0) - (f2, v∧0) - (L_h g, v)."""

    quadratic: float
    drive1: float
    drive2: float
    boundary: float

    @property
    def total(self) -> float:
        return self.quadratic + self.drive1 + self.drive2 + self.boundary

    def as_row(self) -> Tuple[float, float, float, float, float]:
        return (self.total, self.quadratic, self.drive1, self.drive2, self.boundary)


@dataclass(frozen=True)
class JpStep:
    """One coordinate step of the interleaved descent sequence."""

    p: int
    coordinate: int
    drop: float
    bound: float


def split(v: ScalarField) -> Tuple[ScalarField, ScalarField]:
    """(v∨0, -(v∧0)); the two parts never share a nonzero node."""
    values = v.values
    u1 = np.where(values > 0.0, values, 0.0)
    u2 = np.where(values < 0.0, -values, 0.0)
    return ScalarField(v.grid, u1), ScalarField(v.grid, u2)


def _interior(grid: GridSpec) -> Tuple[slice, ...]:
    return (slice(1, -1),) * grid.dim


def _energy_terms(values: np.ndarray, problem: ProblemSpec) -> EnergyBreakdown:
    # values vanish on the boundary, so every inner product reduces to the interior
    grid = problem.grid
    inside = _interior(grid)
    vi = values[inside]
    lv = laplacian_values(values, grid.h)
    return EnergyBreakdown(
        quadratic=float(-0.5 * np.sum(lv * vi)),
        drive1=float(np.sum(problem.f1.values[inside] * np.maximum(vi, 0.0))),
        drive2=float(-np.sum(problem.f2.values[inside] * np.minimum(vi, 0.0))),
        boundary=float(-np.sum(problem.laplacian_g * vi)),
    )


def discrete_energy(v: ScalarField, problem: ProblemSpec) -> EnergyBreakdown:
    """J_h on the space of grid vectors vanishing on the boundary."""
    if v.grid != problem.grid:
        raise ContractViolation("energy requested on a field from another grid")
    if np.any(v.values[v.grid.boundary_mask()] != 0.0):
        raise ContractViolation("J_h is defined for vectors with zero boundary values")
    return _energy_terms(v.values, problem)


def _interior_trace(trace: Sequence[ScalarField], problem: ProblemSpec) -> np.ndarray:
    if problem.grid.dim != 1:
        raise ContractViolation("the interleaved descent sequence is only defined in 1D")
    if len(trace) < 2:
        raise ContractViolation("need at least two recorded sweeps")
    return np.array([field.interior() for field in trace])


def _hybrid(tv: np.ndarray, k: int, i: int) -> np.ndarray:
    """(0, v^k_1..v^k_i, v^{k-1}_{i+1}..v^{k-1}_{N-1}, 0)."""
    full = np.zeros(tv.shape[1] + 2)
    full[1 : i + 1] = tv[k, :i]
    full[i + 1 : -1] = tv[k - 1, i:]
    return full


def jp_sequence(trace: Sequence[ScalarField], problem: ProblemSpec) -> List[float]:
    """Energies of the coordinate-interleaved vectors, p = (N-1)(k-1) + i.

    ``trace`` holds the difference iterates v^0, v^1, ..., v^K; only their
    interior values enter.
    """
    tv = _interior_trace(trace, problem)
    interior_count = tv.shape[1]
    values = []
    for k in range(1, tv.shape[0]):
        for i in range(1, interior_count + 1):
            values.append(_energy_terms(_hybrid(tv, k, i), problem).total)
    return values


def jp_drop_bounds(
    trace: Sequence[ScalarField], problem: ProblemSpec, jp: Optional[Sequence[float]] = None
) -> List[JpStep]:
    """Each consecutive drop J_p - J_{p+1} with its lower bound (Δ of the moved coordinate)²/h².

    Pass ``jp`` when the sequence has already been evaluated for this trace.
    """
    tv = _interior_trace(trace, problem)
    if jp is None:
        jp = jp_sequence(trace, problem)
    interior_count = tv.shape[1]
    h2 = problem.grid.h ** 2
    steps = []
    for p in range(1, len(jp)):
        k, i = divmod(p - 1, interior_count)
        k, i = k + 1, i + 1
        if i < interior_count:
            # coordinate i+1 moves from sweep k-1 to sweep k
            coordinate, old, new = i + 1, tv[k - 1, i], tv[k, i]
        else:
            coordinate, old, new = 1, tv[k, 0], tv[k + 1, 0]
        steps.append(JpStep(p, coordinate, jp[p - 1] - jp[p], float((old - new) ** 2 / h2)))
    return steps


def _gradient_energy(values: np.ndarray, h: float) -> float:
    """Sum over cells of 1/2 |forward-difference gradient|² times the cell measure."""
    if values.ndim == 1:
        gx = np.diff(values) / h
        return float(0.5 * np.sum(gx * gx) * h)
    gx = (values[1:, :-1] - values[:-1, :-1]) / h
    gy = (values[:-1, 1:] - values[:-1, :-1]) / h
    return float(0.5 * np.sum(gx * gx + gy * gy) * h * h)


def _integrate(values: np.ndarray, grid: GridSpec) -> float:
    """Composite trapezoidal rule over the grid."""
    result = values
    for axis in range(grid.dim - 1, -1, -1):
        result = trapezoid(result, grid.coordinates(axis), axis=axis)
    return float(result)


def continuous_energy(u1: ScalarField, u2: ScalarField, problem: ProblemSpec) -> float:
    """E(u1, u2) by quadrature; a diagnostic, first order at kinks."""
    if u1.grid != u2.grid or u1.grid != problem.grid:
        raise ContractViolation("densities and problem must share one grid")
    grid = problem.grid
    total = 0.0
    for u, f in ((u1, problem.f1), (u2, problem.f2)):
        total += _gradient_energy(u.values, grid.h) + _integrate(f.values * u.values, grid)
    return total


def membrane_energy(v: ScalarField, problem: ProblemSpec) -> float:
    """I(v) = ∫ 1/2 |∇v|² + f1 (v∨0) - f2 (v∧0), same quadrature as continuous_energy."""
    if v.grid != problem.grid:
        raise ContractViolation("field and problem must share one grid")
    grid = problem.grid
    drive = problem.f1.values * np.maximum(v.values, 0.0) - problem.f2.values * np.minimum(v.values, 0.0)
    return _gradient_energy(v.values, grid.h) + _integrate(drive, grid)
