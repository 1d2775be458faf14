"""Checks on a computed fixed point: complementarity, free boundary, errors.

The difference v = u1 - u2 of a fixed point solves the discrete obstacle-type
system L_h v = f1 on {v > 0}, L_h v = -f2 on {v < 0} and
-f2 <= L_h v <= f1 on {v = 0}; these helpers measure how closely a state
meets it and where the phases meet.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from .grid import ContractViolation, GridSpec, Index, ScalarField, laplacian_values
from .problem import ProblemSpec
from .solver import SolverState, max_change, sweep

logger = logging.getLogger(__name__)


class NotConvergedError(RuntimeError):
    """A state handed to a fixed-point check is not a fixed point."""


class NodeClass(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    ZERO = "zero"


_CODES = {1: NodeClass.POSITIVE, -1: NodeClass.NEGATIVE, 0: NodeClass.ZERO}


def residual_bound(grid: GridSpec, tol: float, safety: float = 1.0) -> float:
    """Complementarity residual implied by a sweep change of ``tol``: safety * (2d/h²) * tol."""
    return safety * (2.0 * grid.dim / grid.h**2) * tol


def complementarity_residuals(
    u1: np.ndarray, u2: np.ndarray, problem: ProblemSpec
) -> Tuple[np.ndarray, np.ndarray]:
    """Interior-shaped sign codes (+1, -1, 0) of v and the residual of each node's condition."""
    inside = (slice(1, -1),) * problem.grid.dim
    v = u1 - u2
    vi = v[inside]
    lv = laplacian_values(v, problem.grid.h)
    f1 = problem.f1.values[inside]
    f2 = problem.f2.values[inside]
    codes = np.sign(vi).astype(int)
    zero_res = np.maximum(np.maximum(lv - f1, -f2 - lv), 0.0)
    residuals = np.where(codes > 0, np.abs(lv - f1), np.where(codes < 0, np.abs(lv + f2), zero_res))
    return codes, residuals


def scaled_residual(u1: np.ndarray, u2: np.ndarray, problem: ProblemSpec) -> float:
    """Largest complementarity residual times h²/(2d), comparable with a sweep change."""
    _, residuals = complementarity_residuals(u1, u2, problem)
    if residuals.size == 0:
        return 0.0
    grid = problem.grid
    return float(np.max(residuals)) * grid.h**2 / (2.0 * grid.dim)


@dataclass(frozen=True, eq=False)
class ComplementarityReport:
    grid: GridSpec
    codes: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    bound: float

    def _interior_index(self, pos: Tuple[int, ...]) -> Index:
        t = tuple(int(p) + 1 for p in pos)
        return t[0] if self.grid.dim == 1 else t

    def classification(self, idx: Index) -> NodeClass:
        t = (idx,) if self.grid.dim == 1 else tuple(idx)
        return _CODES[int(self.codes[tuple(i - 1 for i in t)])]

    def max_residual(self, node_class: Optional[NodeClass] = None) -> float:
        if node_class is None:
            selected = self.residuals
        else:
            code = {v: k for k, v in _CODES.items()}[node_class]
            selected = self.residuals[self.codes == code]
        return float(np.max(selected)) if selected.size else 0.0

    def worst(self) -> Dict[str, Tuple[Optional[Index], float]]:
        """Per class, the node with the largest residual (None when the class is empty)."""
        out = {}
        for code, node_class in _CODES.items():
            mask = self.codes == code
            if not np.any(mask):
                out[node_class.value] = (None, 0.0)
                continue
            masked = np.where(mask, self.residuals, -np.inf)
            pos = np.unravel_index(int(np.argmax(masked)), masked.shape)
            out[node_class.value] = (self._interior_index(pos), float(masked[pos]))
        return out

    def counts(self) -> Dict[str, int]:
        return {node_class.value: int(np.count_nonzero(self.codes == code)) for code, node_class in _CODES.items()}

    @property
    def satisfied(self) -> bool:
        return self.max_residual() <= self.bound


def complementarity(
    state: SolverState, problem: ProblemSpec, tol: float = 1e-10, safety: float = 10.0
) -> ComplementarityReport:
    """Classify nodes by the sign of v and measure each node's complementarity residual.

    Raises NotConvergedError when one more sweep would still move the state
    by more than ``tol``.
    """
    change = max_change(state, sweep(state, problem))
    if change > tol:
        raise NotConvergedError(f"state after {state.k} sweeps moves by {change:.3e} > tol={tol:g}")
    codes, residuals = complementarity_residuals(state.u1.values, state.u2.values, problem)
    report = ComplementarityReport(problem.grid, codes, residuals, residual_bound(problem.grid, tol, safety))
    logger.debug(f"Complementarity: max residual {report.max_residual():.3e}, bound {report.bound:.3e}")
    return report


@dataclass(frozen=True)
class FreeBoundarySet:
    """Where the phases meet: sign-change edges and the zero set of v."""

    grid: GridSpec
    edges: Tuple[Tuple[Index, Index], ...]
    zero_nodes: Tuple[Index, ...]
    nodes: Tuple[Tuple[Index, NodeClass], ...]
    zero_area: float


def _sign_class(value: float) -> NodeClass:
    if value > 0:
        return NodeClass.POSITIVE
    if value < 0:
        return NodeClass.NEGATIVE
    return NodeClass.ZERO


def _node(grid: GridSpec, pos) -> Index:
    return int(pos[0]) if grid.dim == 1 else (int(pos[0]), int(pos[1]))


def free_boundary(state: SolverState) -> FreeBoundarySet:
    grid = state.grid
    v = state.v.values
    edges: List[Tuple[Index, Index]] = []
    for axis in range(grid.dim):
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        a, b = v[tuple(lo)], v[tuple(hi)]
        opposite = ((a > 0) & (b < 0)) | ((a < 0) & (b > 0))
        zero_meets_nonzero = ((a == 0) & (b != 0)) | ((a != 0) & (b == 0))
        for pos in np.argwhere(opposite | zero_meets_nonzero):
            first = _node(grid, pos)
            step = np.zeros(grid.dim, dtype=int)
            step[axis] = 1
            edges.append((first, _node(grid, pos + step)))
    edges.sort(key=lambda e: (grid.flat_index(e[0]), grid.flat_index(e[1])))

    zero_mask = (state.u1.values == 0.0) & (state.u2.values == 0.0) & grid.interior_mask()
    zero_nodes = tuple(sorted((_node(grid, p) for p in np.argwhere(zero_mask)), key=grid.flat_index))

    marked = {idx for edge in edges for idx in edge} | set(zero_nodes)
    nodes = tuple((idx, _sign_class(state.v[idx])) for idx in sorted(marked, key=grid.flat_index))
    area = len(zero_nodes) * grid.h**grid.dim
    return FreeBoundarySet(grid, tuple(edges), zero_nodes, nodes, area)


@dataclass(frozen=True)
class ErrorReport:
    """Max-norm differences over interior nodes; combination_holds is None when not applicable."""

    err_u1: float
    err_u2: float
    err_v: float
    err_sum: float
    combination_holds: Optional[bool]

    @property
    def worst(self) -> float:
        return max(self.err_u1, self.err_u2, self.err_v)


def _disjoint(a: np.ndarray, b: np.ndarray) -> bool:
    return not np.any((a != 0.0) & (b != 0.0))


def error_vs_reference(state: SolverState, reference: Tuple[ScalarField, ScalarField]) -> ErrorReport:
    ref1, ref2 = reference
    grid = state.grid
    if ref1.grid != grid or ref2.grid != grid:
        raise ContractViolation("reference must be sampled on the solver grid")
    if grid.n < 2:
        return ErrorReport(0.0, 0.0, 0.0, 0.0, None)

    u1, u2 = state.u1.interior(), state.u2.interior()
    r1, r2 = ref1.interior(), ref2.interior()
    e1 = u1 - r1
    e2 = u2 - r2
    err_u1 = float(np.max(np.abs(e1)))
    err_u2 = float(np.max(np.abs(e2)))
    err_v = float(np.max(np.abs((u1 - u2) - (r1 - r2))))
    err_sum = float(np.max(np.abs((u1 + u2) - (r1 + r2))))

    holds = None
    if _disjoint(u1, u2) and _disjoint(r1, r2):
        # e1 * e2 <= 0 node-wise, hence |e1 + e2| <= |e1 - e2|
        holds = bool(np.max(np.abs(e1 + e2)) <= np.max(np.abs(e1 - e2)))
    return ErrorReport(err_u1, err_u2, err_v, err_sum, holds)
