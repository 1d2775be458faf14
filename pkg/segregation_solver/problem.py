import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .grid import GridSpec, Index, ScalarField, laplacian_values

logger = logging.getLogger(__name__)

PROBLEM_KEYS = ("name", "dim", "origin", "extent", "n", "f1", "f2", "phi1", "phi2")
REQUIRED_KEYS = PROBLEM_KEYS[1:]
DYNAMICS_KINDS = ("constant", "table")
TRACE_KINDS = ("constant", "table", "piecewise_linear")


class ProblemFileError(ValueError):
    """Problem file rejected; rendered as ``path:line:col: message``."""

    def __init__(self, message: str, path: str = "<problem>", line: int = 1, column: int = 1):
        super().__init__(message)
        self.message = message
        self.path = path
        self.line = line
        self.column = column

    def __str__(self):
        return f"{self.path}:{self.line}:{self.column}: {self.message}"


def boundary_arc(grid: GridSpec) -> List[Tuple[Index, float]]:
    """Boundary nodes with their arc position, in arc order.

    1D: left endpoint at t=0, right endpoint at t=L. 2D: counterclockwise from
    the origin corner (bottom, right, top, left), each corner listed once.
    """
    if grid.dim == 1:
        return [(0, 0.0), (grid.n, grid.extent[0])]
    n, side = grid.n, grid.extent[0]
    offsets = grid.coordinates(0) - grid.origin[0]
    y_offsets = grid.coordinates(1) - grid.origin[1]
    arc = [((i, 0), float(offsets[i])) for i in range(n + 1)]
    arc += [((n, j), side + float(y_offsets[j])) for j in range(1, n + 1)]
    arc += [((i, n), 3.0 * side - float(offsets[i])) for i in range(n - 1, -1, -1)]
    arc += [((0, j), 4.0 * side - float(y_offsets[j])) for j in range(n - 1, 0, -1)]
    return arc


@dataclass(frozen=True, eq=False)
class BoundaryTrace:
    """Node values of a boundary datum φ_i; interior entries are zero."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise ValueError("boundary trace values must be finite")
        values[self.grid.interior_mask()] = 0.0
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: GridSpec, c: float) -> "BoundaryTrace":
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def table(cls, grid: GridSpec, values: Sequence[float]) -> "BoundaryTrace":
        """Explicit values, one per boundary node in arc order."""
        arc = boundary_arc(grid)
        if len(values) != len(arc):
            raise ValueError(f"trace table needs {len(arc)} values, got {len(values)}")
        out = np.zeros(grid.shape)
        for (idx, _), value in zip(arc, values):
            out[idx] = float(value)
        return cls(grid, out)

    @classmethod
    def piecewise_linear(cls, grid: GridSpec, knots: Sequence[Sequence[float]]) -> "BoundaryTrace":
        """Linear interpolation in arc position; clamped beyond the end knots."""
        if not isinstance(knots, (list, tuple)) or len(knots) == 0:
            raise ValueError("piecewise_linear needs a non-empty list of knots")
        for k in knots:
            if not isinstance(k, (list, tuple)) or len(k) != 2:
                raise ValueError(f"piecewise_linear knots must be [position, value] pairs, got {k!r}")
        ts = np.array([float(k[0]) for k in knots])
        vs = np.array([float(k[1]) for k in knots])
        if not (np.all(np.isfinite(ts)) and np.all(np.isfinite(vs))):
            raise ValueError("piecewise_linear knots must be finite")
        if np.any(np.diff(ts) <= 0):
            raise ValueError("piecewise_linear knots must have strictly increasing positions")
        arc = boundary_arc(grid)
        out = np.zeros(grid.shape)
        for idx, t in arc:
            out[idx] = np.interp(t, ts, vs)
        return cls(grid, out)

    def arc_values(self) -> List[float]:
        return [float(self.values[idx]) for idx, _ in boundary_arc(self.grid)]

    def max(self) -> float:
        return float(np.max(self.values[self.grid.boundary_mask()]))


@dataclass(frozen=True, eq=False)
class DynamicsField:
    """Internal dynamics f_i at every node."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.size != self.grid.size:
            raise ValueError(f"dynamics needs {self.grid.size} values, got {values.size}")
        if values.shape != self.grid.shape:
            values = values.reshape(self.grid.shape, order="F")
        if not np.all(np.isfinite(values)):
            raise ValueError("dynamics values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: GridSpec, c: float) -> "DynamicsField":
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def table(cls, grid: GridSpec, values: Sequence[float]) -> "DynamicsField":
        """Per-node values in row-major file order."""
        return cls(grid, np.asarray(values, dtype=float).ravel())

    def constant_value(self) -> Optional[float]:
        first = float(self.values.flat[0])
        return first if np.all(self.values == first) else None


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    grid: GridSpec
    f1: DynamicsField
    f2: DynamicsField
    phi1: BoundaryTrace
    phi2: BoundaryTrace
    name: str = "custom"

    def __post_init__(self):
        for part in (self.f1, self.f2, self.phi1, self.phi2):
            if part.grid != self.grid:
                raise ValueError(f"problem {self.name!r} mixes grids")

    @cached_property
    def g(self) -> ScalarField:
        """φ₁ − φ₂ on the boundary, zero inside."""
        return ScalarField(self.grid, self.phi1.values - self.phi2.values)

    @cached_property
    def laplacian_g(self) -> np.ndarray:
        """Interior-shaped L_h g of the zero-extended boundary field."""
        return laplacian_values(self.g.values, self.grid.h)

    def with_dynamics(self, f1: DynamicsField, f2: DynamicsField) -> "ProblemSpec":
        return ProblemSpec(self.grid, f1, f2, self.phi1, self.phi2, self.name)


@dataclass(frozen=True)
class Violation:
    node: Index
    condition: str
    value: float

    def __str__(self):
        return f"{self.condition} at node {self.node} (value {self.value!r})"


@dataclass(frozen=True, eq=False)
class ModifiedDynamics:
    """f̃₁, f̃₂ on interior nodes: f_i minus the absorbed boundary term L_h g."""

    f1_tilde: np.ndarray
    f2_tilde: np.ndarray


def validate(problem: ProblemSpec) -> List[Violation]:
    """Empty list when the data lie in the admissible set, else every breach."""
    grid = problem.grid
    boundary = grid.boundary_mask()
    violations: List[Violation] = []
    for idx in grid.iter_nodes():
        p1, p2 = problem.phi1.values[idx], problem.phi2.values[idx]
        if boundary[idx]:
            if p1 < 0:
                violations.append(Violation(idx, "negative boundary trace phi1", float(p1)))
            if p2 < 0:
                violations.append(Violation(idx, "negative boundary trace phi2", float(p2)))
            # one factor must be an exact zero
            if p1 != 0.0 and p2 != 0.0:
                violations.append(Violation(idx, "product nonzero at node", float(p1 * p2)))
        for label, dyn in (("f1", problem.f1), ("f2", problem.f2)):
            if dyn.values[idx] < 0:
                violations.append(Violation(idx, f"negative dynamics {label}", float(dyn.values[idx])))
    if violations:
        logger.info(f"Problem {problem.name!r} has {len(violations)} violations")
    return violations


def modified_dynamics(problem: ProblemSpec) -> ModifiedDynamics:
    interior = (slice(1, -1),) * problem.grid.dim
    lg = problem.laplacian_g
    return ModifiedDynamics(
        f1_tilde=problem.f1.values[interior] - lg,
        f2_tilde=problem.f2.values[interior] - lg,
    )


# -- problem files ---------------------------------------------------------


def _locate(text: str, key: str) -> Tuple[int, int]:
    """Line/column of the first mention of a JSON key, 1-based."""
    pos = text.find(f'"{key}"')
    if pos < 0:
        return 1, 1
    line = text.count("\n", 0, pos) + 1
    column = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, column


def _number(raw: Any, key: str) -> float:
    if isinstance(raw, bool):
        raise ValueError(f"'{key}' holds a boolean where a number is expected")
    value = float(raw)
    if not np.isfinite(value):
        raise ValueError(f"non-finite value {raw!r} in '{key}'")
    return value


def _axis_values(raw: Any, dim: int, key: str) -> Tuple[float, ...]:
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        raw = [raw]
    if not isinstance(raw, list) or len(raw) != dim:
        raise ValueError(f"'{key}' must be a list of {dim} numbers")
    return tuple(_number(v, key) for v in raw)


def _single_kind(raw: Any, key: str, kinds: Sequence[str]) -> Tuple[str, Any]:
    if not isinstance(raw, dict) or len(raw) != 1:
        raise ValueError(f"'{key}' must be an object with exactly one of {list(kinds)}")
    kind, payload = next(iter(raw.items()))
    if kind not in kinds:
        raise KeyError(kind)
    return kind, payload


def _numbers(payload: Any, key: str) -> List[float]:
    if not isinstance(payload, list):
        raise ValueError(f"'{key}' table must be a list of numbers")
    return [_number(v, key) for v in payload]


def _parse_dynamics(grid: GridSpec, raw: Any, key: str) -> DynamicsField:
    kind, payload = _single_kind(raw, key, DYNAMICS_KINDS)
    if kind == "constant":
        return DynamicsField.constant(grid, _number(payload, key))
    return DynamicsField.table(grid, _numbers(payload, key))


def _parse_trace(grid: GridSpec, raw: Any, key: str) -> BoundaryTrace:
    kind, payload = _single_kind(raw, key, TRACE_KINDS)
    if kind == "constant":
        return BoundaryTrace.constant(grid, _number(payload, key))
    if kind == "table":
        return BoundaryTrace.table(grid, _numbers(payload, key))
    return BoundaryTrace.piecewise_linear(grid, payload)


def parse_problem(text: str, path: str = "<problem>") -> ProblemSpec:
    """Build a ProblemSpec from the JSON problem schema."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProblemFileError(e.msg, path, e.lineno, e.colno) from e
    if not isinstance(doc, dict):
        raise ProblemFileError("top level must be a JSON object", path)

    for key in doc:
        if key not in PROBLEM_KEYS:
            raise ProblemFileError(f"unknown key '{key}'", path, *_locate(text, key))
    for key in REQUIRED_KEYS:
        if key not in doc:
            raise ProblemFileError(f"missing required key '{key}'", path)

    current = "dim"
    try:
        dim = doc["dim"]
        if dim not in (1, 2) or isinstance(dim, bool):
            raise ValueError("'dim' must be 1 or 2")
        current = "origin"
        origin = _axis_values(doc["origin"], dim, "origin")
        current = "extent"
        extent = _axis_values(doc["extent"], dim, "extent")
        current = "n"
        if not isinstance(doc["n"], int) or isinstance(doc["n"], bool):
            raise ValueError("'n' must be an integer")
        grid = GridSpec(dim, origin, extent, doc["n"])
        parts = {}
        for current in ("f1", "f2"):
            parts[current] = _parse_dynamics(grid, doc[current], current)
        for current in ("phi1", "phi2"):
            parts[current] = _parse_trace(grid, doc[current], current)
        name = doc.get("name", "custom")
    except KeyError as e:
        kind = e.args[0]
        raise ProblemFileError(f"unknown key '{kind}' in '{current}'", path, *_locate(text, kind)) from e
    except (ValueError, TypeError) as e:
        raise ProblemFileError(str(e), path, *_locate(text, current)) from e

    return ProblemSpec(grid, parts["f1"], parts["f2"], parts["phi1"], parts["phi2"], str(name))


def load_problem(path: str) -> ProblemSpec:
    logger.info(f"Loading problem file {path}")
    with open(path, "r", encoding="utf-8") as f:
        return parse_problem(f.read(), path)


def problem_to_dict(problem: ProblemSpec) -> Dict[str, Any]:
    """Problem in the file schema, dynamics and traces written as tables."""
    grid = problem.grid

    def dyn(d: DynamicsField) -> Dict[str, Any]:
        c = d.constant_value()
        if c is not None:
            return {"constant": c}
        return {"table": [float(v) for v in d.values.ravel(order="F")]}

    return {
        "name": problem.name,
        "dim": grid.dim,
        "origin": list(grid.origin),
        "extent": list(grid.extent),
        "n": grid.n,
        "f1": dyn(problem.f1),
        "f2": dyn(problem.f2),
        "phi1": {"table": problem.phi1.arc_values()},
        "phi2": {"table": problem.phi2.arc_values()},
    }
