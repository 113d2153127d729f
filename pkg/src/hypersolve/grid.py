"""Dyadic cell-centered grids on Q = [0,1]^m, grid functions and norms.

A level-``k`` grid splits each axis into ``2**k`` cells of width
``h = 2**-k``; vector values live at cell centers ``((i+1/2)h, ...)``.

Storage layout (fixed so binary dumps are reproducible): the value array has
shape ``(N,)*m + (n,)`` in C order with dimensions ``(axis m, ..., axis 1,
component)``.  Flattened, the n components of a cell are contiguous and the
axis-1 index varies fastest among cells.

Norms: ``sup`` (max over cells of the Euclidean vector norm), ``L2``
(``sqrt(h^m * sum <u,u>)``), their A-weighted variants with ``<Au,u>``, and
for space-time functions ``sL2`` (max over time levels of the per-level L2).
L2 sums reduce the flattened array with numpy's pairwise summation, which is
deterministic for a fixed shape.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, InputDataError, UsageError
from .linalg import SymMatrix, as_sym, sym_eigen

_DUMP_MAGIC = b"HSGF"
_DUMP_VERSION = 1
_HEADER = struct.Struct("<4sIIIIId")


@dataclass(frozen=True)
class Grid:
    """Uniform dyadic grid: ``m`` space dimensions at refinement level ``k``."""

    m: int
    k: int

    def __post_init__(self):
        if not 1 <= self.m <= 3:
            raise UsageError(f"space dimension m={self.m} unsupported (need 1..3)")
        if not 0 <= self.k <= 52:
            raise UsageError(f"refinement level k={self.k} out of range 0..52")

    @property
    def h(self) -> float:
        return 2.0 ** -self.k

    @property
    def cells_per_axis(self) -> int:
        return 2 ** self.k

    @property
    def num_cells(self) -> int:
        return self.cells_per_axis ** self.m

    def centers(self) -> np.ndarray:
        """Cell-center coordinates along one axis."""
        return (np.arange(self.cells_per_axis) + 0.5) * self.h

    def center_points(self) -> np.ndarray:
        """All cell centers, shape ``(N,)*m + (m,)`` in storage layout;
        last index is the coordinate (x_1, ..., x_m)."""
        c = self.centers()
        mesh = np.meshgrid(*([c] * self.m), indexing="ij")
        # storage dim d holds axis (m - d), so axis a's coordinate varies
        # along dim (m - a)
        return np.stack([mesh[self.m - a] for a in range(1, self.m + 1)], axis=-1)


def _check_finite_values(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        raise InputDataError(f"{what} contains a non-finite value at index {tuple(bad)}")


@dataclass(frozen=True)
class GridFunction:
    """Vector-valued values at the cell centers of one time level."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        N = self.grid.cells_per_axis
        expected = (N,) * self.grid.m
        if arr.ndim != self.grid.m + 1 or arr.shape[:-1] != expected:
            raise UsageError(
                f"value array shape {arr.shape} does not match grid "
                f"{expected} + (n,)"
            )
        _check_finite_values(arr, "grid function")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[-1]

    def value_at(self, idx: Sequence[int]) -> np.ndarray:
        """Value vector of the cell with multi-index (i_1, ..., i_m)."""
        return self.data[tuple(reversed(tuple(idx)))]


@dataclass(frozen=True)
class SpaceTimeGridFunction:
    """A sequence of grid functions at times 0, tau, ..., min(l*tau, T_final)."""

    grid: Grid
    tau: float
    levels: tuple[GridFunction, ...]
    T_final: float

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if not self.levels:
            raise UsageError("a space-time grid function needs at least one level")
        n = self.levels[0].n
        for lev in self.levels:
            if lev.grid != self.grid or lev.n != n:
                raise UsageError("all time levels must share grid and component count")
        if self.tau <= 0.0 and len(self.levels) > 1:
            raise UsageError("time step must be positive")

    @property
    def n(self) -> int:
        return self.levels[0].n

    @property
    def num_steps(self) -> int:
        return len(self.levels) - 1

    def level_times(self) -> np.ndarray:
        """Time of each level; the final step may be shorter than tau."""
        t = self.tau * np.arange(len(self.levels))
        if len(self.levels) > 1:
            t[-1] = self.T_final
        return t


@dataclass(frozen=True)
class NormKind:
    """Which norm to evaluate; A-weighted tags carry the weight matrix."""

    tag: str
    weight: SymMatrix | None = None

    _GRID_TAGS = ("sup", "L2", "A_L2")
    _SPACETIME_TAGS = ("sup", "sL2", "A_sL2")

    def __post_init__(self):
        all_tags = ("sup", "L2", "sL2", "A_L2", "A_sL2")
        if self.tag not in all_tags:
            raise UsageError(f"unknown norm tag {self.tag!r}; expected one of {all_tags}")
        if self.weighted and self.weight is None:
            raise UsageError(f"norm {self.tag!r} requires a weight matrix")
        if not self.weighted and self.weight is not None:
            raise UsageError(f"norm {self.tag!r} does not take a weight matrix")
        if self.weight is not None:
            object.__setattr__(self, "weight", as_sym(self.weight))

    @property
    def weighted(self) -> bool:
        return self.tag.startswith("A_")


def restrict(f: Callable[[np.ndarray], np.ndarray], grid: Grid, n: int | None = None) -> GridFunction:
    """Sample a continuous function at the cell centers.

    ``f`` maps an array of points with trailing coordinate axis to an array
    of values with trailing component axis (a scalar result is treated as a
    single component).
    """
    pts = grid.center_points()
    vals = np.asarray(f(pts), dtype=np.float64)
    if vals.shape == pts.shape[:-1]:
        vals = vals[..., None]
    if vals.shape[:-1] != pts.shape[:-1]:
        raise UsageError(
            f"initial function returned shape {vals.shape} for points "
            f"{pts.shape[:-1]}"
        )
    if n is not None and vals.shape[-1] != n:
        raise UsageError(f"initial function has {vals.shape[-1]} components, expected {n}")
    if not np.all(np.isfinite(vals)):
        bad = np.argwhere(~np.isfinite(vals))[0][:-1]
        coord = pts[tuple(bad)]
        raise InputDataError(f"initial function is non-finite at x = {tuple(coord)}")
    return GridFunction(grid, vals)


def _check_weight(kind: NormKind, n: int) -> np.ndarray:
    w = kind.weight
    assert w is not None
    if w.n != n:
        raise UsageError(f"weight matrix is {w.n}x{w.n} but the function has n={n}")
    lam = sym_eigen(w).eigenvalues
    if lam[0] < -1e-12 * (1.0 + float(np.abs(lam).max())):
        raise ConfigurationError(
            f"weight matrix is not positive semidefinite (lambda_min = {lam[0]:.3e})"
        )
    return w.a


def _level_l2(u: GridFunction, weight: np.ndarray | None) -> float:
    q = u.data * u.data if weight is None else (u.data @ weight) * u.data
    return float(np.sqrt(u.grid.h ** u.grid.m * np.sum(q)))


def _level_sup(u: GridFunction) -> float:
    if u.data.size == 0:
        return 0.0
    return float(np.sqrt((u.data * u.data).sum(axis=-1).max()))


def grid_norm(u: GridFunction, kind: NormKind) -> float:
    """sup / L2 / A_L2 norm of a single-level grid function."""
    if kind.tag == "sup":
        return _level_sup(u)
    if kind.tag == "L2":
        return _level_l2(u, None)
    if kind.tag == "A_L2":
        return _level_l2(u, _check_weight(kind, u.n))
    raise UsageError(f"norm {kind.tag!r} applies to space-time functions, not grid functions")


def spacetime_norm(u: SpaceTimeGridFunction, kind: NormKind) -> float:
    """sup / sL2 / A_sL2 norm of a space-time grid function."""
    if kind.tag == "sup":
        return max(_level_sup(lev) for lev in u.levels)
    if kind.tag == "sL2":
        return max(_level_l2(lev, None) for lev in u.levels)
    if kind.tag == "A_sL2":
        w = _check_weight(kind, u.n)
        return max(_level_l2(lev, w) for lev in u.levels)
    raise UsageError(f"norm {kind.tag!r} applies to grid functions, not space-time functions")


def write_dump(path, u: SpaceTimeGridFunction) -> None:
    """Binary dump: header (magic, version, m, k, n, L, tau) then the levels
    in time order, each in storage layout, float64 little-endian."""
    header = _HEADER.pack(
        _DUMP_MAGIC, _DUMP_VERSION, u.grid.m, u.grid.k, u.n, u.num_steps, float(u.tau)
    )
    with open(path, "wb") as fh:
        fh.write(header)
        for lev in u.levels:
            fh.write(np.ascontiguousarray(lev.data, dtype="<f8").tobytes())


def read_dump(path) -> SpaceTimeGridFunction:
    """Read a binary dump.  T_final is reconstructed as L*tau; a shortened
    final step cannot be represented in the format."""
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) != _HEADER.size:
            raise InputDataError(f"dump {path} is truncated")
        magic, version, m, k, n, L, tau = _HEADER.unpack(raw)
        if magic != _DUMP_MAGIC:
            raise InputDataError(f"dump {path} has bad magic {magic!r}")
        if version != _DUMP_VERSION:
            raise InputDataError(f"dump {path} has unsupported version {version}")
        grid = Grid(m, k)
        shape = (grid.cells_per_axis,) * m + (n,)
        count = int(np.prod(shape))
        levels = []
        for _ in range(L + 1):
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise InputDataError(f"dump {path} is truncated")
            levels.append(GridFunction(grid, np.frombuffer(buf, dtype="<f8").reshape(shape)))
    return SpaceTimeGridFunction(grid, tau, tuple(levels), T_final=L * tau)
