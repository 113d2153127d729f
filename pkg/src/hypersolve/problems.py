"""Built-in systems, the wave-equation reduction and the domain of
correctness for Cauchy problems.

Built-ins: scalar advection (any dimension), acoustics in 1..3 dimensions
(velocities then pressure; ``A = diag(rho0,...,1/(rho0 c0^2))``), and the
9x9 velocity-stress form of linear elasticity.

Elasticity variable order is (s11, s22, s33, s12, s13, s23, u1, u2, u3).
The shear-stress equations are scaled by 2 so the coefficient matrices come
out symmetric; with that convention A is block diagonal:

* normal stresses: ``I/(2 mu) - lam/(2 mu (3 lam + 2 mu)) * ones(3,3)``
  (eigenvalues ``1/(3 lam + 2 mu)`` and ``1/(2 mu)`` twice),
* shear stresses: ``I/mu``,
* velocities: ``rho * I``.

The symmetry, positivity and the P/S wave speeds ``sqrt((lam+2mu)/rho)`` /
``sqrt(mu/rho)`` are verified by the test suite rather than trusted from
hand algebra.

The domain of correctness H of a Cauchy problem is the polyhedron
``t >= 0``, ``x_i - lambda_max_i t >= 0``, ``x_i - 1 - lambda_min_i t <= 0``
cut by the extreme pencil eigenvalues of each axis.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, InputDataError, UsageError
from .grid import Grid
from .linalg import sym_eigen
from .scheme import BoundarySpec, SymmetricSystem, check_dissipativity


def advection_system(speeds) -> SymmetricSystem:
    """Scalar transport ``u_t + sum_i speeds[i] u_{x_i} = 0``."""
    speeds = np.atleast_1d(np.asarray(speeds, dtype=np.float64))
    return SymmetricSystem(np.array([[1.0]]), tuple(np.array([[s]]) for s in speeds))


def acoustics_system(rho0: float, c0: float, dim: int = 3) -> SymmetricSystem:
    """Acoustics in ``dim`` dimensions: velocities then pressure.

    ``A = diag(rho0, ..., rho0, 1/(rho0 c0^2))`` and ``B_i`` couples velocity
    i with the pressure; the pencil eigenvalues of every axis are
    ``+-c0`` plus ``dim - 1`` zeros.
    """
    if rho0 <= 0.0 or c0 <= 0.0:
        raise ConfigurationError(
            f"acoustics needs positive rho0 and c0, got rho0={rho0}, c0={c0}"
        )
    if not 1 <= dim <= 3:
        raise UsageError(f"acoustics dimension must be 1..3, got {dim}")
    n = dim + 1
    A = np.zeros((n, n))
    np.fill_diagonal(A, rho0)
    A[dim, dim] = 1.0 / (rho0 * c0 * c0)
    Bs = []
    for i in range(dim):
        B = np.zeros((n, n))
        B[i, dim] = B[dim, i] = 1.0
        Bs.append(B)
    return SymmetricSystem(A, tuple(Bs))


def pressure_wall_boundary(dim: int = 3) -> BoundarySpec:
    """p = 0 on all faces of an acoustics system (dissipative walls)."""
    n = dim + 1
    phi = np.zeros((1, n))
    phi[0, dim] = 1.0
    return BoundarySpec.walls([(phi, phi) for _ in range(dim)])


def elasticity_system(rho: float, lam: float, mu: float) -> SymmetricSystem:
    """Velocity-stress linear elasticity (n = 9, m = 3)."""
    if rho <= 0.0 or mu <= 0.0:
        raise ConfigurationError(f"elasticity needs rho, mu > 0, got rho={rho}, mu={mu}")
    if 3.0 * lam + 2.0 * mu <= 0.0:
        raise ConfigurationError(
            f"elasticity needs 3*lam + 2*mu > 0, got {3.0 * lam + 2.0 * mu}"
        )
    n = 9
    # variable order: s11 s22 s33 s12 s13 s23 u1 u2 u3
    A = np.zeros((n, n))
    A[:3, :3] = np.eye(3) / (2.0 * mu) - lam / (2.0 * mu * (3.0 * lam + 2.0 * mu)) * np.ones((3, 3))
    A[3:6, 3:6] = np.eye(3) / mu  # shear rows carry the 2x scaling
    A[6:, 6:] = rho * np.eye(3)

    shear_index = {(1, 2): 3, (1, 3): 4, (2, 3): 5}

    def stress_index(i: int, j: int) -> int:
        if i == j:
            return i - 1
        return shear_index[(min(i, j), max(i, j))]

    Bs = []
    for axis in range(1, 4):
        B = np.zeros((n, n))
        for i in range(1, 4):
            # velocity equation: rho du_i/dt - d sigma_{i,axis} / d x_axis = 0
            B[6 + i - 1, stress_index(i, axis)] = -1.0
            B[stress_index(i, axis), 6 + i - 1] = -1.0
        Bs.append(B)
    return SymmetricSystem(A, tuple(Bs))


def elasticity_conservative_boundary() -> BoundarySpec:
    """Zero tangent stresses on every face: sigma_{i1}=0 at x-faces, etc."""
    pairs = []
    rows = {1: (0, 3, 4), 2: (3, 1, 5), 3: (4, 5, 2)}
    for axis in range(1, 4):
        phi = np.zeros((3, 9))
        for r, col in enumerate(rows[axis]):
            phi[r, col] = 1.0
        pairs.append((phi, phi))
    return BoundarySpec.walls(pairs)


# ---------------------------------------------------------------------------
# problem instances


@dataclass(frozen=True)
class ProblemInstance:
    """A fully specified run: system + boundary + initial data + horizon.

    ``initial`` is either ``f(points) -> values`` or an object with
    ``for_grid(grid)`` returning such a function (used when the initial data
    itself depends on the resolution, e.g. the wave reduction's quadrature).
    ``spectra`` optionally carries (n_A, (n_1, ..., n_m)) cardinalities of
    the distinct eigenvalues for validation.  ``enforce_dissipative=False``
    skips the boundary certificate at construction (for diagnostic runs
    whose purpose is to report the violation).
    """

    system: SymmetricSystem
    boundary: BoundarySpec
    initial: object
    T_final: float
    spectra: tuple[int, tuple[int, ...]] | None = None
    enforce_dissipative: bool = True

    def __post_init__(self):
        if self.T_final < 0.0:
            raise UsageError(f"T_final must be nonnegative, got {self.T_final}")
        if self.enforce_dissipative and not self.boundary.all_wrap:
            report = check_dissipativity(self.system, self.boundary)
            if not report.passed:
                raise ConfigurationError(
                    "boundary conditions are not dissipative; witness vector "
                    f"{report.witness()}"
                )
        if self.spectra is not None:
            self._check_spectra()

    def _check_spectra(self):
        n_A, pencil_counts = self.spectra
        got_A = _distinct_count(sym_eigen(self.system.A).eigenvalues)
        got_pencils = tuple(
            _distinct_count(tr.mu) for tr in self.system.transforms
        )
        if got_A != n_A or got_pencils != tuple(pencil_counts):
            warnings.warn(
                f"declared spectra cardinalities {self.spectra} do not match "
                f"computed ({got_A}, {got_pencils})",
                UserWarning,
                stacklevel=3,
            )

    def initial_for_grid(self, grid: Grid) -> Callable:
        fac = getattr(self.initial, "for_grid", None)
        return fac(grid) if fac is not None else self.initial


def _distinct_count(values: np.ndarray) -> int:
    vals = np.sort(np.asarray(values))
    if vals.size == 0:
        return 0
    eps = 1e-12 * (1.0 + float(np.abs(vals).max()))
    return 1 + int((np.diff(vals) > eps).sum())


class WaveInitialData:
    """Initial data of the acoustics reduction of the wave equation.

    Components (u, v, w, p) with ``p = phi`` and
    ``u = -(1/(rho0 c0^2)) * integral_0^x psi(xi, y, z) dxi``; the integral
    uses composite trapezoid with ``2**(k+3)`` subintervals, 8x finer than
    the level-k solve grid requesting the data.
    """

    def __init__(self, phi, psi, rho0: float, c0: float):
        self.phi = phi
        self.psi = psi
        self.rho0 = rho0
        self.c0 = c0

    def for_grid(self, grid: Grid):
        nq = 2 ** (grid.k + 3)
        return lambda pts: self._evaluate(np.asarray(pts, dtype=np.float64), nq)

    def _evaluate(self, pts: np.ndarray, nq: int) -> np.ndarray:
        out = np.zeros(pts.shape[:-1] + (4,))
        out[..., 3] = self.phi(pts)
        x = pts[..., 0]
        # trapezoid on [0, x] per point: nodes x * j/nq, j = 0..nq
        frac = np.linspace(0.0, 1.0, nq + 1)
        nodes = x[..., None] * frac
        eval_pts = np.repeat(pts[..., None, :], nq + 1, axis=-2)
        eval_pts[..., 0] = nodes
        vals = self.psi(eval_pts)
        if not np.all(np.isfinite(vals)):
            raise InputDataError("wave reduction quadrature hit a non-finite value")
        weights = np.full(nq + 1, 1.0)
        weights[0] = weights[-1] = 0.5
        integral = (x / nq) * np.sum(vals * weights, axis=-1)
        out[..., 0] = -integral / (self.rho0 * self.c0 * self.c0)
        return out


def wave_to_acoustics(
    phi, psi, rho0: float, c0: float, *, T_final: float
) -> ProblemInstance:
    """Reduce ``p_tt = c0^2 lap(p)``, ``p|dOmega = 0`` to acoustics with
    p = 0 walls.  ``phi``/``psi`` map point arrays to scalar arrays."""
    system = acoustics_system(rho0, c0, dim=3)
    boundary = pressure_wall_boundary(dim=3)
    initial = WaveInitialData(phi, psi, rho0, c0)
    return ProblemInstance(system, boundary, initial, T_final)


# ---------------------------------------------------------------------------
# domain of correctness


@dataclass(frozen=True)
class CorrectnessDomain:
    """The polyhedron H where the Cauchy problem is classically well posed."""

    lambda_min: tuple[float, ...]
    lambda_max: tuple[float, ...]

    @property
    def m(self) -> int:
        return len(self.lambda_min)

    @property
    def is_compact(self) -> bool:
        """H cap {t > 0} is bounded iff each axis has speeds of both signs."""
        return all(
            lo < 0.0 < hi for lo, hi in zip(self.lambda_min, self.lambda_max)
        )

    def contains(self, x, t: float) -> np.ndarray | bool:
        """Membership test; ``x`` may be a point or an array of points."""
        pts = np.asarray(x, dtype=np.float64)
        squeeze = pts.ndim == 1
        if squeeze:
            pts = pts[None, :]
        if pts.shape[-1] != self.m:
            raise UsageError(f"points have {pts.shape[-1]} coordinates, domain has {self.m}")
        ok = np.full(pts.shape[:-1], t >= 0.0)
        for i in range(self.m):
            xi = pts[..., i]
            ok &= xi - self.lambda_max[i] * t >= 0.0
            ok &= xi - 1.0 - self.lambda_min[i] * t <= 0.0
        return bool(ok[0]) if squeeze else ok


def correctness_domain(system: SymmetricSystem) -> CorrectnessDomain:
    """Per-axis extreme pencil eigenvalues of the system."""
    los, his = [], []
    for tr in system.transforms:
        los.append(float(tr.mu[0]))
        his.append(float(tr.mu[-1]))
    return CorrectnessDomain(tuple(los), tuple(his))


def cells_in_domain(grid: Grid, domain: CorrectnessDomain, t: float) -> np.ndarray:
    """Mask (storage layout) of the cells all of whose 2^m corners lie in H
    at time t -- conservative inclusion."""
    if t < 0.0:
        raise UsageError(f"time must be nonnegative, got {t}")
    if grid.m != domain.m:
        raise UsageError(f"grid has m={grid.m}, domain has m={domain.m}")
    N = grid.cells_per_axis
    edges = np.arange(N + 1) * grid.h
    lo_pts = edges[:-1]
    hi_pts = edges[1:]
    mask = np.ones((N,) * grid.m, dtype=bool)
    for offsets in itertools.product((0, 1), repeat=grid.m):
        corner_ok = np.ones((N,) * grid.m, dtype=bool)
        for axis in range(1, grid.m + 1):
            coord = hi_pts if offsets[axis - 1] else lo_pts
            along = coord.reshape((-1,) + (1,) * (axis - 1))  # storage dim m-axis
            corner_ok &= _axis_condition(along, domain, axis, t)
        mask &= corner_ok
    return mask


def _axis_condition(xi: np.ndarray, domain: CorrectnessDomain, axis: int, t: float):
    i = axis - 1
    return (xi - domain.lambda_max[i] * t >= 0.0) & (
        xi - 1.0 - domain.lambda_min[i] * t <= 0.0
    )
