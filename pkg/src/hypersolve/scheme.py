"""Upwind dimensional-splitting scheme with CFL control and dissipative
boundary conditions.

One time step (the simultaneous multi-axis update): for each axis i the
physical state is mapped to Riemannian invariants ``v = T_i^-1 u``, upwind
"large values" are selected at the cell faces by the sign of each wave speed
(periodic wrap or a boundary face solve supplies the missing neighbours),
and the combined update is

    u' = u - sum_i T_i (nu_i * (V_face+ - V_face-)),    nu_i = mu_i tau / h,

which is algebraically the classic form ``A (u'-u)/tau + sum_i B_i
(U_face+ - U_face-)/h = 0`` since ``A^-1 B_i T_i = T_i diag(mu_i)``.  For
m == 1 the update is carried out entirely in invariant space, which makes
transport at Courant number one bit-exact.

Boundary conditions are given as matrices Phi on the physical variables
(rows = number of incoming waves at that face); at a face the outgoing and
zero-speed invariants are copied from the adjacent cell and the incoming
ones are solved from ``(Phi T) V_face = 0``.  Dissipativity of a face,
``(B_i u, u) <= 0`` at the low side (>= 0 at the high side) on ker(Phi), is
certified by projecting the quadratic form onto an orthonormal kernel basis.

The time step comes from the per-axis limits ``tau_i = h / max|mu_i|``
combined as ``tau = safety / sum_i (1/tau_i)``, i.e. the stability condition
``tau * sum_i 1/tau_i <= 1``.  Each step's A-weighted energy
``h^m sum <Au,u>`` is recorded; under wrap or dissipative boundaries it must
not increase.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Mapping

import numpy as np

from . import _backend
from .errors import (
    ConfigurationError,
    DegenerateSystemError,
    IllPosedBoundaryError,
    NumericalInstabilityError,
    StabilityError,
    UsageError,
)
from .grid import GridFunction, SpaceTimeGridFunction
from .linalg import CanonicalTransform, SymMatrix, as_sym, canonical_transform, sym_eigen

Side = Literal["low", "high"]

_CFL_SLACK = 1e-12
_ENERGY_SLACK = 1e-12
_FACE_COND_LIMIT = 1e12


# ---------------------------------------------------------------------------
# system and boundary descriptions


@dataclass(frozen=True)
class SymmetricSystem:
    """The matrices of ``A u_t + sum_i B_i u_{x_i} = 0``.

    ``A`` must be symmetric positive definite, every ``B_i`` symmetric.  The
    per-axis canonical transforms are computed once at construction and kept
    fixed for all steps.
    """

    A: SymMatrix
    B: tuple[SymMatrix, ...]
    eps0: float | None = None
    transforms: tuple[CanonicalTransform, ...] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "A", as_sym(self.A))
        object.__setattr__(self, "B", tuple(as_sym(b) for b in self.B))
        if not self.B:
            raise UsageError("a system needs at least one space dimension")
        if not 1 <= len(self.B) <= 3:
            raise UsageError(f"m={len(self.B)} space dimensions unsupported (need 1..3)")
        for i, b in enumerate(self.B, start=1):
            if b.n != self.A.n:
                raise UsageError(
                    f"B_{i} is {b.n}x{b.n} but A is {self.A.n}x{self.A.n}"
                )
        trs = tuple(
            canonical_transform(self.A, b, eps0=self.eps0, axis=i)
            for i, b in enumerate(self.B, start=1)
        )
        object.__setattr__(self, "transforms", trs)

    @property
    def n(self) -> int:
        return self.A.n

    @property
    def m(self) -> int:
        return len(self.B)


class CauchyWrap:
    """Marker: periodic wrap-around at both faces of an axis."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "CauchyWrap()"


CAUCHY_WRAP = CauchyWrap()


@dataclass(frozen=True)
class DissipativeFace:
    """Homogeneous boundary condition ``Phi u = 0`` on one face."""

    phi: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.phi, dtype=np.float64)
        if arr.ndim != 2:
            raise UsageError(f"boundary matrix must be 2-D, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "phi", arr)

    @property
    def rows(self) -> int:
        return self.phi.shape[0]


@dataclass(frozen=True)
class BoundarySpec:
    """Per-axis, per-side boundary description.

    An axis is either fully periodic (CauchyWrap on both sides) or carries a
    DissipativeFace on each side; mixing the two on one axis is rejected
    because wrap couples both ends.
    """

    faces: Mapping[tuple[int, Side], CauchyWrap | DissipativeFace]

    def __post_init__(self):
        faces = dict(self.faces)
        axes = sorted({axis for axis, _ in faces})
        if axes != list(range(1, len(axes) + 1)):
            raise UsageError(f"boundary axes must be 1..m, got {axes}")
        for axis in axes:
            for side in ("low", "high"):
                if (axis, side) not in faces:
                    raise UsageError(f"axis {axis} is missing its {side} face")
            wraps = [isinstance(faces[(axis, s)], CauchyWrap) for s in ("low", "high")]
            if any(wraps) and not all(wraps):
                raise UsageError(
                    f"axis {axis} mixes wrap and dissipative faces; wrap couples "
                    f"both ends"
                )
        object.__setattr__(self, "faces", dict(faces))

    @property
    def m(self) -> int:
        return max(axis for axis, _ in self.faces)

    def is_wrap(self, axis: int) -> bool:
        return isinstance(self.faces[(axis, "low")], CauchyWrap)

    @property
    def all_wrap(self) -> bool:
        return all(self.is_wrap(axis) for axis in range(1, self.m + 1))

    @classmethod
    def cauchy(cls, m: int) -> "BoundarySpec":
        """Periodic wrap on every axis (Cauchy problem)."""
        return cls({(a, s): CAUCHY_WRAP for a in range(1, m + 1) for s in ("low", "high")})

    @classmethod
    def walls(cls, phis: list[tuple[np.ndarray, np.ndarray]]) -> "BoundarySpec":
        """Dissipative faces from per-axis (phi_low, phi_high) pairs."""
        faces: dict[tuple[int, Side], CauchyWrap | DissipativeFace] = {}
        for axis, (lo, hi) in enumerate(phis, start=1):
            faces[(axis, "low")] = DissipativeFace(lo)
            faces[(axis, "high")] = DissipativeFace(hi)
        return cls(faces)


def validate_boundary(system: SymmetricSystem, boundary: BoundarySpec) -> None:
    """Check the row counts of all boundary matrices against the sign
    partition of each axis pencil."""
    if boundary.m != system.m:
        raise UsageError(f"boundary covers {boundary.m} axes, system has {system.m}")
    for axis in range(1, system.m + 1):
        if boundary.is_wrap(axis):
            continue
        tr = system.transforms[axis - 1]
        n_plus, _, n_minus = tr.counts
        for side, expected in (("low", n_plus), ("high", n_minus)):
            face = boundary.faces[(axis, side)]
            assert isinstance(face, DissipativeFace)
            if face.phi.shape[1] != system.n:
                raise UsageError(
                    f"axis {axis} {side} boundary matrix has {face.phi.shape[1]} "
                    f"columns, system has n={system.n}"
                )
            if face.rows != expected:
                raise UsageError(
                    f"axis {axis} {side} boundary matrix has {face.rows} rows "
                    f"but the pencil has {expected} incoming waves"
                )


# ---------------------------------------------------------------------------
# CFL time step


@dataclass(frozen=True)
class TimeStep:
    """CFL-derived step: tau, the per-axis limits and Courant numbers."""

    tau: float
    axis_limits: tuple[float, ...]
    courant_numbers: tuple[float, ...]


@dataclass(frozen=True)
class StepPlan:
    """Number of steps covering [0, T_final]; the last step may be shorter.

    The combined stability condition reads ``sum of per-axis Courant
    numbers <= 1``; it is part of the type unless the plan was built with
    checks disabled (instability demonstrations).
    """

    tau: float
    L: int
    T_final: float
    courant_numbers: tuple[float, ...]
    checked: bool = True

    def __post_init__(self):
        if self.T_final < 0.0:
            raise UsageError(f"T_final must be nonnegative, got {self.T_final}")
        if self.L > 0 and not (
            self.L * self.tau >= self.T_final * (1.0 - 1e-9)
            and self.T_final > (self.L - 1) * self.tau * (1.0 - 1e-9)
        ):
            raise UsageError(
                f"inconsistent plan: L={self.L}, tau={self.tau}, T_final={self.T_final}"
            )
        if self.checked and sum(self.courant_numbers) > 1.0 + _CFL_SLACK:
            raise StabilityError(
                f"combined Courant number {sum(self.courant_numbers):.6f} "
                f"exceeds 1"
            )

    def step_sizes(self):
        # The last step takes the remainder; the min() guards against float
        # noise pushing it an ulp past tau when T_final is commensurate.
        for l in range(self.L):
            if l < self.L - 1:
                yield self.tau
            else:
                yield min(self.tau, self.T_final - (self.L - 1) * self.tau)


def cfl_timestep(
    system: SymmetricSystem, h: float, safety: float = 1.0, *, enforce: bool = True
) -> TimeStep:
    """Stable time step ``tau = safety / sum_i (1 / tau_i)`` with per-axis
    limits ``tau_i = h / max|mu_i|``.

    Axes whose pencil is identically zero contribute nothing; if every
    pencil is zero there is no wave to resolve and the system is degenerate.
    With ``enforce=False`` the safety factor may exceed 1 (used only to
    demonstrate instability).
    """
    if enforce and not 0.0 < safety <= 1.0:
        raise UsageError(f"safety factor must be in (0, 1], got {safety}")
    if h <= 0.0:
        raise UsageError(f"grid step must be positive, got {h}")
    inverse_sum = 0.0
    limits = []
    for tr in system.transforms:
        speed = tr.max_speed
        if speed <= tr.eps0:
            limits.append(math.inf)
            continue
        limit = h / speed
        limits.append(limit)
        inverse_sum += 1.0 / limit
    if inverse_sum == 0.0:
        raise DegenerateSystemError("every axis pencil is identically zero")
    tau = safety / inverse_sum
    courant = tuple(
        tau * tr.max_speed / h for tr in system.transforms
    )
    return TimeStep(tau, tuple(limits), courant)


def plan_steps(step: TimeStep, T_final: float, *, checked: bool = True) -> StepPlan:
    if T_final < 0.0:
        raise UsageError(f"T_final must be nonnegative, got {T_final}")
    if T_final == 0.0:
        return StepPlan(step.tau, 0, 0.0, step.courant_numbers, checked)
    ratio = T_final / step.tau
    nearest = round(ratio)
    if nearest >= 1 and abs(ratio - nearest) <= 1e-9 * max(1.0, ratio):
        L = int(nearest)  # commensurate up to float noise
    else:
        L = max(1, math.ceil(ratio))
    return StepPlan(step.tau, L, T_final, step.courant_numbers, checked)


# ---------------------------------------------------------------------------
# 1-D building blocks


def large_values_1d(w, mu_sign: int, edge) -> np.ndarray:
    """Face values of one scalar invariant: ``W[i] = w[i-1]`` for positive
    speed, ``w[i]`` for negative, zeros for zero speed.

    ``edge`` fills the face whose upwind cell is outside the domain:
    ``"wrap"`` copies from the opposite end, a ``(low, high)`` pair supplies
    pre-solved boundary values.
    """
    w = np.asarray(w, dtype=np.float64)
    N = w.shape[0]
    W = np.zeros(N + 1, dtype=np.float64)
    if mu_sign == 0:
        return W
    if mu_sign > 0:
        W[1:] = w
        W[0] = w[-1] if edge == "wrap" else edge[0]
    else:
        W[:-1] = w
        W[N] = w[0] if edge == "wrap" else edge[1]
    return W


def step_1d(w, mu: float, tau: float, h: float, W) -> np.ndarray:
    """One upwind step of ``w_t + mu w_x = 0``: ``w - nu (W[i+1] - W[i])``.

    The two terms are grouped so that at Courant number one the update
    reproduces the upwind neighbour bit-for-bit.
    """
    w = np.asarray(w, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    nu = mu * tau / h
    if abs(nu) > 1.0 + _CFL_SLACK:
        raise StabilityError(
            f"Courant number |{nu:.6f}| exceeds 1 for eigenvalue mu={mu}"
        )
    if mu >= 0.0:
        return (w - nu * W[1:]) + nu * W[:-1]
    return (w + nu * W[:-1]) - nu * W[1:]


# ---------------------------------------------------------------------------
# boundary face solve


def _face_matrix(phi: np.ndarray, transform: CanonicalTransform, side: Side) -> np.ndarray:
    """Matrix S with ``V_face = S v_interior`` for one dissipative face.

    Outgoing and zero-speed invariant components are copied from the
    interior; incoming components solve ``(Phi T) V_face = 0`` with the
    copied components fixed.
    """
    n = transform.n
    incoming = transform.signs > 0 if side == "low" else transform.signs < 0
    idx_in = np.nonzero(incoming)[0]
    idx_rest = np.nonzero(~incoming)[0]
    if phi.shape[0] != idx_in.size:
        raise UsageError(
            f"boundary matrix has {phi.shape[0]} rows but the face has "
            f"{idx_in.size} incoming waves"
        )
    S = np.zeros((n, n))
    S[idx_rest, idx_rest] = 1.0
    if idx_in.size:
        G = phi @ transform.T
        G_in = G[:, idx_in]
        # conditioning of the solve relative to the full row scale; a plain
        # cond(G_in) would miss e.g. a 1x1 block that is tiny but nonzero
        sigma_min = np.linalg.svd(G_in, compute_uv=False)[-1]
        scale = np.linalg.norm(G, 2)
        if not sigma_min > scale / _FACE_COND_LIMIT:
            raise IllPosedBoundaryError(
                f"incoming-wave block of the boundary condition is singular "
                f"(condition estimate > {_FACE_COND_LIMIT:.0e})"
            )
        if idx_rest.size:
            S[np.ix_(idx_in, idx_rest)] = -np.linalg.solve(G_in, G[:, idx_rest])
    return S


def boundary_face_solve(
    axis: int, side: Side, phi, transform: CanonicalTransform, v_interior
) -> np.ndarray:
    """Full invariant vector at a boundary face from the adjacent cell."""
    phi = np.asarray(phi, dtype=np.float64)
    if phi.ndim == 1:
        phi = phi[None, :]
    v_interior = np.asarray(v_interior, dtype=np.float64)
    S = _face_matrix(phi, transform, side)
    return S @ v_interior


def _face_operators(system: SymmetricSystem, boundary: BoundarySpec):
    """Per-axis (S_low, S_high) pair, or None for wrap axes."""
    ops = []
    for axis in range(1, system.m + 1):
        if boundary.is_wrap(axis):
            ops.append(None)
            continue
        tr = system.transforms[axis - 1]
        lo = boundary.faces[(axis, "low")]
        hi = boundary.faces[(axis, "high")]
        assert isinstance(lo, DissipativeFace) and isinstance(hi, DissipativeFace)
        ops.append((_face_matrix(lo.phi, tr, "low"), _face_matrix(hi.phi, tr, "high")))
    return ops


# ---------------------------------------------------------------------------
# full multi-axis step


def _courant_profile(tr: CanonicalTransform, tau: float, h: float, enforce_cfl: bool):
    a = np.abs(tr.mu) * (tau / h)
    a[tr.signs == 0] = 0.0
    if enforce_cfl and a.size and a.max() > 1.0 + _CFL_SLACK:
        worst = int(np.argmax(a))
        raise StabilityError(
            f"axis {tr.axis}: Courant number {a.max():.6f} exceeds 1 for "
            f"eigenvalue mu={tr.mu[worst]:.6g}"
        )
    return np.ascontiguousarray(a), tr.signs.copy()


def step_multi(
    u: GridFunction,
    system: SymmetricSystem,
    boundary: BoundarySpec,
    tau: float,
    *,
    transforms: tuple[CanonicalTransform, ...] | None = None,
    face_ops=None,
    enforce_cfl: bool = True,
) -> GridFunction:
    """One simultaneous dimensional-splitting step on the whole grid."""
    m, n = system.m, system.n
    if u.grid.m != m:
        raise UsageError(f"grid has m={u.grid.m}, system has m={m}")
    if u.n != n:
        raise UsageError(f"grid function has n={u.n}, system has n={n}")
    trs = transforms if transforms is not None else system.transforms
    if face_ops is None:
        validate_boundary(system, boundary)
        face_ops = _face_operators(system, boundary)
    h = u.grid.h
    N = u.grid.cells_per_axis
    data = u.data

    if m == 1:
        tr = trs[0]
        a, sgn = _courant_profile(tr, tau, h, enforce_cfl)
        v = np.ascontiguousarray((data @ tr.T_inv.T)[None])
        v_low, v_high = _face_values(v, face_ops[0])
        v_new = _backend.axis_sweep_convex(v, a, sgn, v_low, v_high, face_ops[0] is None)
        new_data = v_new[0] @ tr.T.T
    else:
        new_data = data.copy()
        for axis in range(1, m + 1):
            tr = trs[axis - 1]
            a, sgn = _courant_profile(tr, tau, h, enforce_cfl)
            d = m - axis  # storage dimension of this axis
            v = data @ tr.T_inv.T
            moved = np.moveaxis(v, d, m - 1)
            pencil_shape = moved.shape
            flat = np.ascontiguousarray(moved).reshape(-1, N, n)
            v_low, v_high = _face_values(flat, face_ops[axis - 1])
            delta = _backend.axis_sweep_delta(flat, a, sgn, v_low, v_high, face_ops[axis - 1] is None)
            delta = np.moveaxis(delta.reshape(pencil_shape), m - 1, d)
            new_data -= delta @ tr.T.T

    if not np.all(np.isfinite(new_data)):
        raise NumericalInstabilityError("non-finite values after a scheme step")
    return GridFunction(u.grid, new_data)


def _face_values(flat_v: np.ndarray, ops):
    if ops is None:
        return None, None
    S_low, S_high = ops
    v_low = np.ascontiguousarray(flat_v[:, 0, :] @ S_low.T)
    v_high = np.ascontiguousarray(flat_v[:, -1, :] @ S_high.T)
    return v_low, v_high


# ---------------------------------------------------------------------------
# time integration, energy certificate, dissipativity check


@dataclass(frozen=True)
class EnergyTrace:
    """A-weighted discrete energy ``h^m sum <Au,u>`` per time level."""

    energies: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "energies", np.asarray(self.energies, dtype=np.float64))
        object.__setattr__(self, "times", np.asarray(self.times, dtype=np.float64))


def discrete_energy(u: GridFunction, A: SymMatrix) -> float:
    q = (u.data @ A.a) * u.data
    return float(u.grid.h ** u.grid.m * np.sum(q))


def solve(
    system: SymmetricSystem,
    boundary: BoundarySpec,
    phi: GridFunction,
    T_final: float,
    safety: float = 1.0,
    *,
    tau: float | None = None,
    enforce_cfl: bool = True,
) -> tuple[SpaceTimeGridFunction, EnergyTrace]:
    """Advance the initial data to T_final and record the energy trace.

    An explicit ``tau`` overrides the CFL-derived step (used e.g. to rerun a
    perturbed system with the base system's step); it must still satisfy the
    per-step Courant check unless ``enforce_cfl`` is off.
    """
    validate_boundary(system, boundary)
    if not boundary.all_wrap:
        certificate = check_dissipativity(system, boundary)
        if not certificate.passed:
            raise ConfigurationError(
                "boundary conditions are not dissipative; energy growth and "
                f"non-uniqueness are possible (witness {certificate.witness()})"
            )
    if tau is None:
        step = cfl_timestep(system, phi.grid.h, safety, enforce=enforce_cfl)
    else:
        if tau <= 0.0:
            raise UsageError(f"tau must be positive, got {tau}")
        step = TimeStep(
            float(tau),
            (),
            tuple(float(tau) * tr.max_speed / phi.grid.h for tr in system.transforms),
        )
    plan = plan_steps(step, T_final, checked=enforce_cfl)
    face_ops = _face_operators(system, boundary)

    levels = [phi]
    energies = [discrete_energy(phi, system.A)]
    u = phi
    for level, dt in enumerate(plan.step_sizes(), start=1):
        try:
            u = step_multi(
                u, system, boundary, dt, face_ops=face_ops, enforce_cfl=enforce_cfl
            )
        except NumericalInstabilityError as exc:
            raise NumericalInstabilityError(f"{exc} (time level {level})") from exc
        levels.append(u)
        energies.append(discrete_energy(u, system.A))

    times = plan.tau * np.arange(len(levels))
    if len(levels) > 1:
        times[-1] = T_final
    stf = SpaceTimeGridFunction(phi.grid, plan.tau, tuple(levels), T_final)
    return stf, EnergyTrace(np.array(energies), times)


@dataclass(frozen=True)
class EnergyCheck:
    passed: bool
    max_relative_increase: float


def energy_check(trace: EnergyTrace, tol: float = _ENERGY_SLACK) -> EnergyCheck:
    """Pass iff the energy never grows by more than a relative ``tol``
    between consecutive levels."""
    e = trace.energies
    if e.shape[0] < 2:
        return EnergyCheck(True, 0.0)
    prev, nxt = e[:-1], e[1:]
    scale = np.maximum(prev, np.finfo(float).tiny)
    rel = (nxt - prev) / scale
    worst = float(rel.max())
    return EnergyCheck(bool(np.all(nxt <= prev * (1.0 + tol))), max(worst, 0.0))


@dataclass(frozen=True)
class FaceCertificate:
    axis: int
    side: Side
    passed: bool
    worst_eigenvalue: float
    witness: np.ndarray | None


@dataclass(frozen=True)
class DissipativityReport:
    faces: tuple[FaceCertificate, ...]

    @property
    def passed(self) -> bool:
        return all(f.passed for f in self.faces)

    def witness(self) -> np.ndarray | None:
        for f in self.faces:
            if not f.passed:
                return f.witness
        return None


def _kernel_basis(phi: np.ndarray) -> np.ndarray:
    _, s, vh = np.linalg.svd(phi)
    tol = max(phi.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int((s > tol).sum())
    return vh[rank:].T


def check_dissipativity(
    system: SymmetricSystem, boundary: BoundarySpec, eps0: float | None = None
) -> DissipativityReport:
    """Certify ``(B_i u, u) <= 0`` (low) / ``>= 0`` (high) on ker(Phi) for
    every dissipative face; a violating vector is returned as witness."""
    validate_boundary(system, boundary)
    certs = []
    for axis in range(1, system.m + 1):
        if boundary.is_wrap(axis):
            continue
        Bi = system.B[axis - 1].a
        for side in ("low", "high"):
            face = boundary.faces[(axis, side)]
            assert isinstance(face, DissipativeFace)
            if face.rows == 0:
                certs.append(FaceCertificate(axis, side, True, 0.0, None))
                continue
            Z = _kernel_basis(face.phi)
            if Z.shape[1] == 0:
                certs.append(FaceCertificate(axis, side, True, 0.0, None))
                continue
            form = sym_eigen(Z.T @ Bi @ Z)
            tol = (
                eps0
                if eps0 is not None
                else 1e-12 * (1.0 + float(np.abs(form.eigenvalues).max()))
            )
            if side == "low":
                worst = float(form.eigenvalues[-1])
                bad = worst > tol
                vec = form.eigenvectors[:, -1]
            else:
                worst = float(form.eigenvalues[0])
                bad = worst < -tol
                vec = form.eigenvectors[:, 0]
            witness = Z @ vec if bad else None
            certs.append(FaceCertificate(axis, side, not bad, worst, witness))
    return DissipativityReport(tuple(certs))
