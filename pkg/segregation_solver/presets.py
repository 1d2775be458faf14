"""Catalog of the reference problems: four 1D interval runs and two 2D square runs."""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np

from .grid import GridSpec
from .problem import BoundaryTrace, DynamicsField, ProblemSpec, validate

logger = logging.getLogger(__name__)

SideFunc = Callable[[np.ndarray], np.ndarray]


class UnknownPresetError(KeyError):
    def __str__(self):
        return f"unknown preset {self.args[0]!r}; choose one of {', '.join(PRESET_NAMES)}"


@dataclass(frozen=True)
class PresetDefinition:
    name: str
    dim: int
    origin: Tuple[float, ...]
    side: float
    f1: float
    f2: float
    boundary: str

    def describe(self) -> Dict[str, object]:
        if self.dim == 1:
            domain = f"[{self.origin[0]:g}, {self.origin[0] + self.side:g}]"
        else:
            x0, y0 = self.origin
            domain = f"[{x0:g}, {x0 + self.side:g}] x [{y0:g}, {y0 + self.side:g}]"
        return {
            "name": self.name,
            "dim": self.dim,
            "domain": domain,
            "f1": self.f1,
            "f2": self.f2,
            "boundary": self.boundary,
        }


_INTERVAL_BOUNDARY = "phi1(-1)=1, phi2(1)=1, phi2(-1)=phi1(1)=0"
_SQUARE_BOUNDARY = (
    "phi1=0.5 on x=0, piecewise linear on y=0 and y=1; "
    "phi2=0.5 on x=1, piecewise linear on y=0 and y=1"
)

PRESETS: Dict[str, PresetDefinition] = {
    "fig1a": PresetDefinition("fig1a", 1, (-1.0,), 2.0, 0.0, 0.0, _INTERVAL_BOUNDARY),
    "fig1b": PresetDefinition("fig1b", 1, (-1.0,), 2.0, 0.0, 3.0, _INTERVAL_BOUNDARY),
    "fig1c": PresetDefinition("fig1c", 1, (-1.0,), 2.0, 1.0, 8.0, _INTERVAL_BOUNDARY),
    "fig1d": PresetDefinition("fig1d", 1, (-1.0,), 2.0, 2.0, 8.0, _INTERVAL_BOUNDARY),
    "fig2": PresetDefinition("fig2", 2, (0.0, 0.0), 1.0, 0.0, 5.0, _SQUARE_BOUNDARY),
    "fig3": PresetDefinition("fig3", 2, (0.0, 0.0), 1.0, 4.0, 12.0, _SQUARE_BOUNDARY),
}

PRESET_NAMES: Tuple[str, ...] = tuple(PRESETS)


# Square traces. Each piece returns an exact 0.0 outside its support so that
# phi1 * phi2 vanishes bit for bit on the whole boundary.


def _phi1_bottom(x: np.ndarray) -> np.ndarray:
    return np.where(x < 0.2, np.maximum(0.5 - 2.5 * x, 0.0), 0.0)


def _phi1_top_bridged(x: np.ndarray) -> np.ndarray:
    # given piece on [0, 0.2]; linear bridge from 0.375 at x=0.2 to 0 at x=0.8
    first = 0.5 - 0.625 * x
    bridge = 0.375 * (0.8 - x) / 0.6
    return np.where(x <= 0.2, first, np.where(x < 0.8, np.maximum(bridge, 0.0), 0.0))


def _phi1_top_full_span(x: np.ndarray) -> np.ndarray:
    return np.where(x < 0.8, np.maximum(0.5 - 0.625 * x, 0.0), 0.0)


def _phi2_bottom(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0.2, np.maximum(-0.125 + 0.625 * x, 0.0), 0.0)


def _phi2_top(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0.8, np.maximum(-2.0 + 2.5 * x, 0.0), 0.0)


def _const(c: float) -> SideFunc:
    return lambda s: np.full_like(s, c, dtype=float)


def square_side_functions(phi1_top_full_span: bool = False) -> Dict[str, Dict[str, SideFunc]]:
    """Side-wise traces of the unit-square presets, keyed by trace then side.

    Bottom/top functions take x, left/right functions take y.
    """
    return {
        "phi1": {
            "bottom": _phi1_bottom,
            "right": _const(0.0),
            "top": _phi1_top_full_span if phi1_top_full_span else _phi1_top_bridged,
            "left": _const(0.5),
        },
        "phi2": {
            "bottom": _phi2_bottom,
            "right": _const(0.5),
            "top": _phi2_top,
            "left": _const(0.0),
        },
    }


def _trace_from_sides(grid: GridSpec, sides: Dict[str, SideFunc]) -> BoundaryTrace:
    x = grid.coordinates(0)
    y = grid.coordinates(1)
    n = grid.n
    values = np.zeros(grid.shape)
    values[:, 0] = sides["bottom"](x)
    values[:, n] = sides["top"](x)
    left = sides["left"](y)
    right = sides["right"](y)
    for corner_j, row in ((0, values[:, 0]), (n, values[:, n])):
        if left[corner_j] != row[0] or right[corner_j] != row[n]:
            raise ValueError(f"trace sides disagree at a corner of row j={corner_j}")
    values[0, 1:n] = left[1:n]
    values[n, 1:n] = right[1:n]
    return BoundaryTrace(grid, values)


def preset(name: str, n: int, phi1_top_full_span: bool = False) -> ProblemSpec:
    """Build a validated reference problem on an n-subdivision grid."""
    try:
        definition = PRESETS[name]
    except KeyError:
        raise UnknownPresetError(name) from None

    if definition.dim == 1:
        grid = GridSpec.interval(definition.origin[0], definition.origin[0] + definition.side, n)
        phi1 = BoundaryTrace.table(grid, [1.0, 0.0])
        phi2 = BoundaryTrace.table(grid, [0.0, 1.0])
    else:
        grid = GridSpec.square(*definition.origin, definition.side, n)
        sides = square_side_functions(phi1_top_full_span)
        phi1 = _trace_from_sides(grid, sides["phi1"])
        phi2 = _trace_from_sides(grid, sides["phi2"])

    problem = ProblemSpec(
        grid,
        DynamicsField.constant(grid, definition.f1),
        DynamicsField.constant(grid, definition.f2),
        phi1,
        phi2,
        name=name,
    )
    violations = validate(problem)
    if violations:
        raise ValueError(f"preset {name} is inadmissible: {violations[0]}")
    logger.debug(f"Built preset {name} with n={n}")
    return problem


def describe_presets() -> List[Dict[str, object]]:
    return [definition.describe() for definition in PRESETS.values()]
