from dataclasses import dataclass, field
from typing import FrozenSet, Iterator, Tuple, Union

import numpy as np

Index = Union[int, Tuple[int, int]]


class ContractViolation(ValueError):
    """Raised when an operation is called outside its precondition."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform node-centered mesh over an interval or a square.

    The spacing ``h`` is always derived from ``extent / n``; both axes of a 2D
    grid share the same subdivision count and therefore the same extent.
    """

    dim: int
    origin: Tuple[float, ...]
    extent: Tuple[float, ...]
    n: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        object.__setattr__(self, "extent", tuple(float(e) for e in self.extent))
        if len(self.origin) != self.dim or len(self.extent) != self.dim:
            raise ValueError(f"origin and extent need {self.dim} entries")
        if any(not np.isfinite(e) or e <= 0 for e in self.extent):
            raise ValueError(f"extent must be positive, got {self.extent}")
        if self.dim == 2 and self.extent[0] != self.extent[1]:
            raise ValueError("2D grids must be square (equal extents)")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def interval(cls, a: float, b: float, n: int) -> "GridSpec":
        return cls(1, (a,), (b - a,), n)

    @classmethod
    def square(cls, x0: float, y0: float, side: float, n: int) -> "GridSpec":
        return cls(2, (x0, y0), (side, side), n)

    @property
    def h(self) -> float:
        return self.extent[0] / self.n

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n + 1,) * self.dim

    @property
    def size(self) -> int:
        return (self.n + 1) ** self.dim

    def coordinates(self, axis: int = 0) -> np.ndarray:
        """Node coordinates along one axis; endpoints are reproduced exactly."""
        start = self.origin[axis]
        return np.linspace(start, start + self.extent[axis], self.n + 1)

    def mesh(self) -> Tuple[np.ndarray, ...]:
        """Coordinate arrays shaped like a field (axis 0 is x)."""
        axes = [self.coordinates(a) for a in range(self.dim)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def interior_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[(slice(1, -1),) * self.dim] = True
        return mask

    def boundary_mask(self) -> np.ndarray:
        return ~self.interior_mask()

    def is_interior(self, idx: Index) -> bool:
        return all(1 <= i <= self.n - 1 for i in _as_tuple(idx, self.dim))

    def flat_index(self, idx: Index) -> int:
        """Row-major position: i in 1D, i + j*(n+1) in 2D."""
        t = _as_tuple(idx, self.dim)
        if self.dim == 1:
            return t[0]
        return t[0] + t[1] * (self.n + 1)

    def iter_nodes(self) -> Iterator[Index]:
        """All node indices in row-major (file) order."""
        if self.dim == 1:
            yield from range(self.n + 1)
        else:
            for j in range(self.n + 1):
                for i in range(self.n + 1):
                    yield (i, j)

    def index_set(self) -> "IndexSet":
        nodes = frozenset(self.iter_nodes())
        interior = frozenset(idx for idx in nodes if self.is_interior(idx))
        return IndexSet(all=nodes, interior=interior, boundary=nodes - interior)


@dataclass(frozen=True)
class IndexSet:
    all: FrozenSet[Index]
    interior: FrozenSet[Index]
    boundary: FrozenSet[Index]


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Grid-indexed real values; ``values[i]`` in 1D, ``values[i, j]`` in 2D."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.shape:
            if values.size == self.grid.size:
                values = from_flat(self.grid, values.ravel())
            else:
                raise ValueError(
                    f"expected {self.grid.size} values for grid {self.grid.shape}, "
                    f"got {values.size}"
                )
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: GridSpec, c: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def sample(cls, grid: GridSpec, func) -> "ScalarField":
        """Evaluate a vectorized callable at the grid nodes."""
        return cls(grid, np.broadcast_to(func(*grid.mesh()), grid.shape))

    def __getitem__(self, idx: Index) -> float:
        return float(self.values[_as_tuple(idx, self.grid.dim)])

    def __add__(self, other: "ScalarField") -> "ScalarField":
        _same_grid(self, other)
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        _same_grid(self, other)
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, scale: float) -> "ScalarField":
        return ScalarField(self.grid, float(scale) * self.values)

    __rmul__ = __mul__

    def interior(self) -> np.ndarray:
        return self.values[(slice(1, -1),) * self.grid.dim]

    def flat(self) -> np.ndarray:
        """Values in row-major file order (i fastest)."""
        return self.values.ravel(order="F")

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def with_boundary_zeroed(self) -> "ScalarField":
        return ScalarField(self.grid, np.where(self.grid.interior_mask(), self.values, 0.0))


def from_flat(grid: GridSpec, flat: np.ndarray) -> np.ndarray:
    """Inverse of ScalarField.flat()."""
    return np.asarray(flat, dtype=float).reshape(grid.shape, order="F")


def _as_tuple(idx: Index, dim: int) -> Tuple[int, ...]:
    t = (idx,) if np.isscalar(idx) else tuple(idx)
    if len(t) != dim:
        raise ContractViolation(f"index {idx!r} does not match grid dimension {dim}")
    return tuple(int(i) for i in t)


def _same_grid(a: ScalarField, b: ScalarField):
    if a.grid != b.grid:
        raise ContractViolation(f"fields live on different grids: {a.grid} vs {b.grid}")


def _check_interior(field: ScalarField, idx: Index) -> Tuple[int, ...]:
    t = _as_tuple(idx, field.grid.dim)
    if not field.grid.is_interior(t):
        raise ContractViolation(f"index {idx!r} is not an interior node (n={field.grid.n})")
    return t


def _neighbor_values(field: ScalarField, t: Tuple[int, ...]) -> Tuple[float, ...]:
    v = field.values
    if field.grid.dim == 1:
        (i,) = t
        return (v[i - 1], v[i + 1])
    i, j = t
    return (v[i - 1, j], v[i + 1, j], v[i, j - 1], v[i, j + 1])


def neighbor_average(field: ScalarField, idx: Index) -> float:
    """Mean over the 2 (1D) or 4 (2D) nearest neighbors of an interior node."""
    t = _check_interior(field, idx)
    nb = _neighbor_values(field, t)
    total = nb[0]
    for value in nb[1:]:
        total = total + value
    return float(total / len(nb))


def discrete_laplacian(field: ScalarField, idx: Index) -> float:
    """3-point (1D) or 5-point (2D) stencil at an interior node."""
    t = _check_interior(field, idx)
    h2 = field.grid.h**2
    v = field.values
    if field.grid.dim == 1:
        (i,) = t
        return float((v[i - 1] - 2.0 * v[i] + v[i + 1]) / h2)
    i, j = t
    return float((v[i - 1, j] + v[i + 1, j] - 4.0 * v[i, j] + v[i, j - 1] + v[i, j + 1]) / h2)


def neighbor_sum(values: np.ndarray) -> np.ndarray:
    """Sum of the nearest neighbors for every interior node (interior-shaped).

    The summation order matches ``neighbor_average`` so both agree bit for bit.
    """
    if values.ndim == 1:
        return values[:-2] + values[2:]
    return values[:-2, 1:-1] + values[2:, 1:-1] + values[1:-1, :-2] + values[1:-1, 2:]


def laplacian_values(values: np.ndarray, h: float) -> np.ndarray:
    """Interior-shaped stencil values of a full-grid array."""
    h2 = h * h
    if values.ndim == 1:
        return (values[:-2] - 2.0 * values[1:-1] + values[2:]) / h2
    return (
        values[:-2, 1:-1]
        + values[2:, 1:-1]
        - 4.0 * values[1:-1, 1:-1]
        + values[1:-1, :-2]
        + values[1:-1, 2:]
    ) / h2


def apply_laplacian(field: ScalarField) -> ScalarField:
    """L_h on every interior node; boundary entries are zero."""
    out = np.zeros(field.grid.shape)
    out[(slice(1, -1),) * field.grid.dim] = laplacian_values(field.values, field.grid.h)
    return ScalarField(field.grid, out)


def inner(w: ScalarField, v: ScalarField) -> float:
    """(w, v) = sum over all nodes of w_a * v_a."""
    _same_grid(w, v)
    return float(np.sum(w.values * v.values))
