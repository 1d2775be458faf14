import logging
import time
from dataclasses import dataclass, field
from typing import Any, List, Optional, Tuple

import numpy as np

from .functional import EnergyBreakdown, JpStep, discrete_energy, jp_drop_bounds, jp_sequence, split
from .grid import ContractViolation, ScalarField, neighbor_sum
from .problem import ProblemSpec

logger = logging.getLogger(__name__)

CRITERIA = ("max_change", "scaled_residual")

# bound checks in check_step tolerate a few ulps of summation noise
STEP_SLACK = 1e-14


@dataclass(frozen=True)
class SolverConfig:
    """Stopping and recording options for one solve.

    ``max_iters`` of None means 50 * n**2 sweeps (``max_iters_per_n2`` * n**2).
    """

    tol: float = 1e-10
    max_iters: Optional[int] = None
    max_iters_per_n2: int = 50
    criterion: str = "max_change"
    record_energy: bool = False
    record_jp: bool = False
    record_trace: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.max_iters_per_n2 < 1:
            raise ValueError(f"max_iters_per_n2 must be at least 1, got {self.max_iters_per_n2}")
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}, got {self.criterion!r}")

    @classmethod
    def from_config(cls, config: Any, **overrides) -> "SolverConfig":
        """Build from the ``solver`` section of a Config, CLI overrides winning when not None."""
        values = {
            "tol": config.get("solver.tol", 1e-10),
            "max_iters_per_n2": config.get("solver.max_iters_per_n2", 50),
            "criterion": config.get("solver.criterion", "max_change"),
            "record_energy": config.get("solver.record_energy", False),
            "record_jp": config.get("solver.record_jp", False),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        values["tol"] = float(values["tol"])
        return cls(**values)

    def iteration_budget(self, n: int) -> int:
        return self.max_iters if self.max_iters is not None else self.max_iters_per_n2 * n * n


@dataclass(frozen=True, eq=False)
class SolverState:
    """Densities (u1, u2) after ``k`` sweeps."""

    u1: ScalarField
    u2: ScalarField
    k: int = 0

    @property
    def grid(self):
        return self.u1.grid

    @property
    def v(self) -> ScalarField:
        return self.u1 - self.u2


@dataclass(eq=False)
class SolveReport:
    state: SolverState
    iterations: int
    converged: bool
    last_change: float
    criterion: str
    tol: float
    last_metric: float = 0.0
    energy: List[EnergyBreakdown] = field(default_factory=list)
    jp: List[float] = field(default_factory=list)
    jp_steps: List[JpStep] = field(default_factory=list)
    trace: List[SolverState] = field(default_factory=list)
    wall_time: float = 0.0


def initialize(problem: ProblemSpec) -> SolverState:
    """u1 = φ₁, u2 = φ₂ on the boundary and zero inside."""
    grid = problem.grid
    return SolverState(ScalarField(grid, problem.phi1.values), ScalarField(grid, problem.phi2.values), 0)


def _positive_part(values: np.ndarray) -> np.ndarray:
    # np.where keeps +0.0; np.maximum(-0.0, 0.0) would return -0.0
    return np.where(values > 0.0, values, 0.0)


class _Sweeper:
    """Jacobi update with the per-problem constants hoisted out of the loop."""

    def __init__(self, problem: ProblemSpec):
        grid = problem.grid
        self.inside = (slice(1, -1),) * grid.dim
        self.divisor = 2.0 * grid.dim
        scale = grid.h * grid.h / self.divisor
        self.c1 = problem.f1.values[self.inside] * scale
        self.c2 = problem.f2.values[self.inside] * scale

    def averages(self, u1: np.ndarray, u2: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return neighbor_sum(u1) / self.divisor, neighbor_sum(u2) / self.divisor

    def step(self, u1: np.ndarray, u2: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
        a1, a2 = self.averages(u1, u2)
        d = a1 - a2
        new1 = u1.copy()
        new2 = u2.copy()
        new1[self.inside] = _positive_part(d - self.c1)
        new2[self.inside] = _positive_part(-d - self.c2)
        change = max(float(np.max(np.abs(new1 - u1))), float(np.max(np.abs(new2 - u2))))
        return new1, new2, change


def sweep(state: SolverState, problem: ProblemSpec) -> SolverState:
    """One simultaneous update of every interior node from the previous iterate."""
    if state.grid != problem.grid:
        raise ContractViolation("state and problem live on different grids")
    new1, new2, _ = _Sweeper(problem).step(state.u1.values, state.u2.values)
    grid = problem.grid
    return SolverState(ScalarField(grid, new1), ScalarField(grid, new2), state.k + 1)


def max_change(a: SolverState, b: SolverState) -> float:
    return max(
        float(np.max(np.abs(a.u1.values - b.u1.values))),
        float(np.max(np.abs(a.u2.values - b.u2.values))),
    )


def _energy_of(state: SolverState, problem: ProblemSpec) -> EnergyBreakdown:
    return discrete_energy(state.v.with_boundary_zeroed(), problem)


def solve(problem: ProblemSpec, config: Optional[SolverConfig] = None) -> SolveReport:
    """Iterate sweeps until the stopping rule holds or the budget is spent."""
    config = config or SolverConfig()
    grid = problem.grid
    if config.record_jp and grid.dim != 1:
        raise ContractViolation("the interleaved descent sequence is only recorded in 1D")

    budget = config.iteration_budget(grid.n)
    state = initialize(problem)
    record_states = config.record_trace or config.record_jp
    energies = [_energy_of(state, problem)] if config.record_energy else []
    trace = [state] if record_states else []

    logger.info(f"Solving {problem.name} (dim={grid.dim}, n={grid.n}) with tol={config.tol:g}, budget={budget}")
    start = time.perf_counter()

    if grid.n < 2:
        # no interior nodes: the initial state is already the answer
        return SolveReport(state, 0, True, 0.0, config.criterion, config.tol, 0.0, energies, trace=trace)

    residuals = None
    if config.criterion == "scaled_residual":
        from .membrane import scaled_residual

        residuals = scaled_residual

    sweeper = _Sweeper(problem)
    u1, u2 = state.u1.values, state.u2.values
    converged = False
    change = metric = float("inf")
    k = 0
    while k < budget:
        u1, u2, change = sweeper.step(u1, u2)
        k += 1
        if record_states or config.record_energy:
            state = SolverState(ScalarField(grid, u1), ScalarField(grid, u2), k)
            if record_states:
                trace.append(state)
            if config.record_energy:
                energies.append(_energy_of(state, problem))
        metric = change if residuals is None else residuals(u1, u2, problem)
        if metric <= config.tol:
            converged = True
            break

    elapsed = time.perf_counter() - start
    state = SolverState(ScalarField(grid, u1), ScalarField(grid, u2), k)
    jp: List[float] = []
    steps: List[JpStep] = []
    if config.record_jp and len(trace) > 1:
        iterates = [s.v for s in trace]
        jp = jp_sequence(iterates, problem)
        steps = jp_drop_bounds(iterates, problem, jp)

    if converged:
        logger.info(f"Converged after {k} sweeps (change {change:.3e}) in {elapsed:.3f}s")
    else:
        logger.warning(f"Stopped after {k} sweeps without meeting tol={config.tol:g} (change {change:.3e})")
    return SolveReport(
        state=state,
        iterations=k,
        converged=converged,
        last_change=change,
        criterion=config.criterion,
        tol=config.tol,
        last_metric=metric,
        energy=energies,
        jp=jp,
        jp_steps=steps,
        trace=trace if config.record_trace else [],
        wall_time=elapsed,
    )


def check_state(state: SolverState, problem: ProblemSpec) -> List[str]:
    """Invariant breaches of a single iterate: sign, disjointness, bounds, boundary data."""
    problems = []
    u1, u2 = state.u1.values, state.u2.values
    if np.any(u1 < 0) or np.any(u2 < 0):
        problems.append("negative density")
    overlap = (u1 != 0.0) & (u2 != 0.0)
    if np.any(overlap):
        problems.append(f"densities overlap at {int(np.count_nonzero(overlap))} nodes")
    if np.any(u1 > problem.phi1.max()):
        problems.append("u1 exceeds max phi1")
    if np.any(u2 > problem.phi2.max()):
        problems.append("u2 exceeds max phi2")
    boundary = problem.grid.boundary_mask()
    if np.any(u1[boundary] != problem.phi1.values[boundary]) or np.any(u2[boundary] != problem.phi2.values[boundary]):
        problems.append("boundary values differ from the traces")
    return problems


def check_step(previous: SolverState, current: SolverState, problem: ProblemSpec) -> List[str]:
    """check_state plus u_i^{k+1} <= neighbor mean of u_i^k on the interior."""
    problems = check_state(current, problem)
    sweeper = _Sweeper(problem)
    a1, a2 = sweeper.averages(previous.u1.values, previous.u2.values)
    if np.any(current.u1.interior() > a1 + STEP_SLACK):
        problems.append("u1 exceeds its neighbor mean")
    if np.any(current.u2.interior() > a2 + STEP_SLACK):
        problems.append("u2 exceeds its neighbor mean")
    return problems


def state_from_difference(v: ScalarField, k: int = 0) -> SolverState:
    """Recover (u1, u2) = (v∨0, -(v∧0))."""
    u1, u2 = split(v)
    return SolverState(u1, u2, k)
