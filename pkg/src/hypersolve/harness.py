"""Empirical verification engine.

What the underlying theory promises cannot be certified a priori (the
convergence constants depend on unknown derivative bounds), so this module
measures it: convergence order across refinement levels, Richardson-style
fast refinement to a target precision, Lipschitz response of the solution to
coefficient perturbations, and the per-run energy certificate.

Continuous errors are evaluated with the fixed midpoint quadrature at 4x the
grid resolution; order fits are least-squares in log2(error) vs k.  All
randomness is a seeded ``numpy.random.default_rng``; reports serialise to
CSV (one row per level/draw) plus a text summary, byte-identical across
repeated runs.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, StabilityError, UsageError
from .grid import Grid, NormKind, SpaceTimeGridFunction, restrict
from .interpolation import (
    interpolate,
    interpolate_spacetime,
    midpoint_quadrature,
    quadrature_level,
)
from .problems import ProblemInstance
from .scheme import (
    EnergyCheck,
    EnergyTrace,
    SymmetricSystem,
    cfl_timestep,
    energy_check,
    solve,
)

EXACT_ERROR_FLOOR = 1e-11


def _fmt(x: float) -> str:
    """Shortest round-trip decimal form; keeps CSV output reproducible."""
    return repr(float(x))


def write_csv(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) if isinstance(x, float) else str(x) for x in row) + "\n")


# ---------------------------------------------------------------------------
# error measurement


def _quadrature_error(
    sol: SpaceTimeGridFunction,
    reference: Callable[[np.ndarray, float], np.ndarray],
    norm: NormKind,
) -> float:
    """Norm of (interpolated solution - reference) over all time levels."""
    m, k = sol.grid.m, sol.grid.k
    pts, weight = midpoint_quadrature(m, quadrature_level(k))
    times = sol.level_times()
    worst = 0.0
    for lev, t in zip(sol.levels, times):
        diff = interpolate(lev)(pts) - np.asarray(reference(pts, float(t)))
        if norm.tag in ("sL2", "L2"):
            val = float(np.sqrt(weight * np.sum(diff * diff)))
        elif norm.tag == "sup":
            val = float(np.sqrt((diff * diff).sum(axis=-1).max()))
        else:
            raise UsageError(f"unsupported study norm {norm.tag!r}")
        worst = max(worst, val)
    return worst


def _grid_value_gap(
    sol: SpaceTimeGridFunction, reference: Callable[[np.ndarray, float], np.ndarray]
) -> float:
    """Max abs difference between solution values and the reference at the
    cell centers, over all levels.  Zero (up to roundoff) when the scheme
    transports exactly, regardless of interpolation error."""
    pts = sol.grid.center_points().reshape(-1, sol.grid.m)
    gap = 0.0
    for lev, t in zip(sol.levels, sol.level_times()):
        ref = np.asarray(reference(pts, float(t))).reshape(lev.data.shape)
        gap = max(gap, float(np.abs(lev.data - ref).max()))
    return gap


def _fit_order(ks: np.ndarray, errors: np.ndarray) -> tuple[float, float, float]:
    """Least-squares fit log2(err) = c - order*k; returns (order, residual,
    constant 2**c)."""
    logs = np.log2(errors)
    design = np.stack([np.ones_like(ks, dtype=float), -ks.astype(float)], axis=1)
    coef, *_ = np.linalg.lstsq(design, logs, rcond=None)
    fitted = design @ coef
    residual = float(np.sqrt(np.mean((logs - fitted) ** 2)))
    return float(coef[1]), residual, float(2.0 ** coef[0])


# ---------------------------------------------------------------------------
# convergence study


@dataclass(frozen=True)
class ConvergenceReport:
    ks: tuple[int, ...]
    errors: tuple[float, ...]
    taus: tuple[float, ...]
    energy_start: tuple[float, ...]
    energy_end: tuple[float, ...]
    order: float | None
    residual: float | None
    constant: float | None
    reference: str  # "analytic" | "richardson"
    norm_tag: str
    status: str  # "ok" | "exact" | "degenerate"

    def rows(self):
        for i, k in enumerate(self.ks):
            yield (
                k,
                self.taus[i],
                2.0 ** -k,
                self.errors[i],
                self.energy_start[i],
                self.energy_end[i],
                self.order if self.order is not None else "",
                self.residual if self.residual is not None else "",
            )

    def to_csv(self, path) -> None:
        write_csv(
            path,
            ["level", "tau", "h", "error", "energy_0", "energy_T", "order_fit", "residual"],
            self.rows(),
        )

    def summary(self) -> str:
        lines = [
            f"convergence study ({self.norm_tag} norm, {self.reference} reference)",
            f"status: {self.status}",
        ]
        for i, k in enumerate(self.ks):
            lines.append(f"  k={k}: error={self.errors[i]:.6e} tau={self.taus[i]:.6e}")
        if self.order is not None:
            lines.append(
                f"fitted order {self.order:.3f} (rms residual {self.residual:.3f}, "
                f"constant {self.constant:.3e})"
            )
        return "\n".join(lines) + "\n"


def convergence_study(
    problem: ProblemInstance,
    k_range: Sequence[int],
    norm: NormKind | None = None,
    reference: Callable[[np.ndarray, float], np.ndarray] | str = "richardson",
    safety: float = 1.0,
    derivative_bound: float | None = None,
) -> ConvergenceReport:
    """Solve across refinement levels and fit the error decay order.

    ``reference`` is an analytic solution ``(points, t) -> values`` or
    ``"richardson"``, which measures against the finest level's solution
    (that level then contributes no error row of its own).
    """
    ks = list(k_range)
    if len(ks) < 3:
        raise UsageError("convergence study needs at least 3 refinement levels")
    if sorted(ks) != ks:
        raise UsageError("k_range must be ascending")
    if norm is None:
        norm = NormKind("sL2")
    richardson = isinstance(reference, str)
    if richardson and reference != "richardson":
        raise UsageError(f"unknown reference {reference!r}")

    if derivative_bound is not None:
        _warn_if_rough(problem, max(ks), derivative_bound)

    solutions: dict[int, tuple[SpaceTimeGridFunction, EnergyTrace]] = {}
    for k in ks:
        grid = Grid(problem.system.m, k)
        phi = restrict(problem.initial_for_grid(grid), grid, problem.system.n)
        solutions[k] = solve(
            problem.system, problem.boundary, phi, problem.T_final, safety
        )

    if richardson:
        fine_interp = interpolate_spacetime(solutions[ks[-1]][0])
        ref_fn = lambda pts, t: fine_interp(pts, t)  # noqa: E731
        error_ks = ks[:-1]
    else:
        ref_fn = reference
        error_ks = ks

    errors = [
        _quadrature_error(solutions[k][0], ref_fn, norm) for k in error_ks
    ]
    if richardson:
        # ||u_k - u_K|| understates the true error of a first-order scheme
        # by the factor (1 - 2^(k-K)); undo it so the fit is unbiased.
        K = ks[-1]
        errors = [e / (1.0 - 2.0 ** (k - K)) for k, e in zip(error_ks, errors)]
    taus = [solutions[k][0].tau for k in error_ks]
    e0 = [float(solutions[k][1].energies[0]) for k in error_ks]
    eT = [float(solutions[k][1].energies[-1]) for k in error_ks]

    if not richardson:
        scale = 1.0 + max(
            float(np.abs(solutions[k][0].levels[0].data).max()) for k in error_ks
        )
        exact_scheme = (
            max(_grid_value_gap(solutions[k][0], ref_fn) for k in error_ks)
            <= EXACT_ERROR_FLOOR * scale
        )
    else:
        exact_scheme = False

    if all(e == 0.0 for e in errors):
        status, order, residual, constant = "degenerate", None, None, None
    elif exact_scheme or max(errors) <= EXACT_ERROR_FLOOR:
        # grid values match the reference to roundoff: the quadrature errors
        # are pure interpolation error and say nothing about the scheme
        status, order, residual, constant = "exact", None, None, None
    else:
        order, residual, constant = _fit_order(np.array(error_ks), np.array(errors))
        status = "ok"
    return ConvergenceReport(
        tuple(error_ks),
        tuple(errors),
        tuple(taus),
        tuple(e0),
        tuple(eT),
        order,
        residual,
        constant,
        "richardson" if richardson else "analytic",
        norm.tag,
        status,
    )


def _warn_if_rough(problem: ProblemInstance, k: int, bound: float) -> None:
    """Sample finite differences of the initial data on the finest grid and
    warn when they exceed the declared derivative bound."""
    grid = Grid(problem.system.m, k)
    phi = restrict(problem.initial_for_grid(grid), grid, problem.system.n)
    worst = 0.0
    for d in range(grid.m):
        diff = np.diff(phi.data, axis=d) / grid.h
        if diff.size:
            worst = max(worst, float(np.abs(diff).max()))
    if worst > bound:
        warnings.warn(
            f"initial data finite differences reach {worst:.3e}, above the "
            f"declared derivative bound {bound:.3e}; convergence constants "
            f"may be large",
            UserWarning,
            stacklevel=3,
        )


# ---------------------------------------------------------------------------
# fast Cauchy refinement


@dataclass(frozen=True)
class FastCauchyResult:
    solution: SpaceTimeGridFunction
    trace: EnergyTrace
    achieved_estimate: float
    k_final: int
    verified: bool
    history: tuple[tuple[int, float], ...]


def fast_cauchy_solve(
    problem: ProblemInstance,
    target_exponent: int,
    k_start: int = 2,
    k_max: int = 10,
    safety: float = 1.0,
) -> FastCauchyResult:
    """Refine until consecutive interpolated solutions differ by at most
    ``2**-target_exponent`` in sL2; capped at ``k_max`` with an explicit
    unverified flag."""
    if target_exponent < 2:
        raise UsageError(f"target exponent must be >= 2, got {target_exponent}")
    if k_start >= k_max:
        raise UsageError("k_start must be below k_max")
    target = 2.0 ** -target_exponent
    norm = NormKind("sL2")

    def run(k: int):
        grid = Grid(problem.system.m, k)
        phi = restrict(problem.initial_for_grid(grid), grid, problem.system.n)
        return solve(problem.system, problem.boundary, phi, problem.T_final, safety)

    history = []
    coarse = run(k_start)
    k = k_start
    while True:
        fine = run(k + 1)
        fine_interp = interpolate_spacetime(fine[0])
        estimate = _quadrature_error(coarse[0], lambda p, t: fine_interp(p, t), norm)
        history.append((k + 1, float(estimate)))
        if estimate <= target:
            return FastCauchyResult(
                fine[0], fine[1], float(estimate), k + 1, True, tuple(history)
            )
        if k + 1 >= k_max:
            return FastCauchyResult(
                fine[0], fine[1], float(estimate), k + 1, False, tuple(history)
            )
        coarse = fine
        k += 1


# ---------------------------------------------------------------------------
# coefficient perturbation study


@dataclass(frozen=True)
class PerturbationReport:
    js: tuple[int, ...]
    draws: tuple[int, ...]
    epsilons: tuple[float, ...]
    deviations: tuple[float, ...]
    slope: float | None
    lipschitz_constant: float | None
    seed: int

    def rows(self):
        for j, d, eps, dev in zip(self.js, self.draws, self.epsilons, self.deviations):
            yield (j, d, eps, dev, self.slope if self.slope is not None else "")

    def to_csv(self, path) -> None:
        write_csv(path, ["j", "draw", "epsilon", "deviation", "slope_fit"], self.rows())

    def summary(self) -> str:
        lines = [f"coefficient perturbation study (seed {self.seed})"]
        for j, d, eps, dev in zip(self.js, self.draws, self.epsilons, self.deviations):
            lines.append(f"  j={j} draw {d}: epsilon={eps:.3e} deviation={dev:.6e}")
        if self.slope is not None:
            lines.append(
                f"fitted slope {self.slope:.3f} (Lipschitz constant "
                f"{self.lipschitz_constant:.3e})"
            )
        return "\n".join(lines) + "\n"


def perturbation_study(
    problem: ProblemInstance,
    j_range: Sequence[int],
    k: int = 5,
    seed: int = 0,
    safety: float = 0.7,
    draws: int = 3,
    max_rejections: int = 100,
) -> PerturbationReport:
    """Response of the solution to uniform noise of magnitude 2**-j in every
    coefficient entry, on a fixed grid with the base system's time step.

    Requires a Cauchy (wrap) problem whose pencils have no zero eigenvalues;
    near-zero eigenvalues make the sign partition, hence the scheme itself,
    unstable under perturbation.  ``safety`` must leave enough CFL headroom
    for the perturbed wave speeds (the default 0.7 covers relative speed
    shifts up to ~40%).
    """
    if not problem.boundary.all_wrap:
        raise UsageError("perturbation study requires a Cauchy (wrap) problem")
    for tr in problem.system.transforms:
        if tr.counts[1] != 0:
            raise ConfigurationError(
                f"axis {tr.axis} pencil has zero eigenvalues; the perturbation "
                f"study requires none"
            )

    rng = np.random.default_rng(seed)
    grid = Grid(problem.system.m, k)
    phi = restrict(problem.initial_for_grid(grid), grid, problem.system.n)
    base_tau = cfl_timestep(problem.system, grid.h, safety).tau
    base_sol, _ = solve(
        problem.system, problem.boundary, phi, problem.T_final, tau=base_tau
    )

    js, draw_ids, epsilons, deviations = [], [], [], []
    for j in j_range:
        eps = 2.0 ** -j
        for d in range(draws):
            system = _perturbed_system(problem.system, eps, rng, max_rejections, j)
            if system is None:
                warnings.warn(
                    f"skipping j={j} draw {d}: perturbed A stayed indefinite "
                    f"after {max_rejections} rejections",
                    UserWarning,
                    stacklevel=2,
                )
                continue
            # same grid, same tau as the base run; safety < 1 leaves CFL
            # headroom for the perturbed wave speeds
            try:
                sol, _ = solve(
                    system, problem.boundary, phi, problem.T_final, tau=base_tau
                )
            except StabilityError as exc:
                raise StabilityError(
                    f"perturbation 2**-{j} pushed a wave speed past the CFL "
                    f"headroom; rerun with a lower safety factor ({exc})"
                ) from exc
            js.append(int(j))
            draw_ids.append(d)
            epsilons.append(eps)
            deviations.append(float(_sl2_deviation(sol, base_sol)))

    positive = [d for d in deviations if d > 0.0]
    if len(positive) >= 2 and len(positive) == len(deviations):
        slope, _, const = _fit_order(np.array(js), np.array(deviations))
        lip = const
    else:
        slope, lip = None, None
    return PerturbationReport(
        tuple(js), tuple(draw_ids), tuple(epsilons), tuple(deviations), slope, lip, seed
    )


def _perturbed_system(
    system: SymmetricSystem, eps: float, rng, max_rejections: int, j: int
):
    n = system.n
    for _ in range(max_rejections):
        try:
            A = system.A.a + rng.uniform(-eps, eps, size=(n, n))
            Bs = tuple(
                b.a + rng.uniform(-eps, eps, size=(n, n)) for b in system.B
            )
            return SymmetricSystem(A, Bs, eps0=system.eps0)
        except ConfigurationError:
            continue  # A lost positive definiteness; redraw
    return None


def _sl2_deviation(a: SpaceTimeGridFunction, b: SpaceTimeGridFunction) -> float:
    if len(a.levels) != len(b.levels):
        raise UsageError("deviation needs solutions with matching time levels")
    worst = 0.0
    hm = a.grid.h ** a.grid.m
    for la, lb in zip(a.levels, b.levels):
        diff = la.data - lb.data
        worst = max(worst, float(np.sqrt(hm * np.sum(diff * diff))))
    return worst


# ---------------------------------------------------------------------------
# energy audit


@dataclass(frozen=True)
class EnergyAudit:
    check: EnergyCheck
    trace: EnergyTrace

    @property
    def passed(self) -> bool:
        return self.check.passed

    def rows(self):
        for t, e in zip(self.trace.times, self.trace.energies):
            yield (float(t), float(e))


def energy_audit(
    problem: ProblemInstance, k: int = 5, safety: float = 1.0
) -> EnergyAudit:
    """Solve and apply the energy certificate."""
    grid = Grid(problem.system.m, k)
    phi = restrict(problem.initial_for_grid(grid), grid, problem.system.n)
    _, trace = solve(problem.system, problem.boundary, phi, problem.T_final, safety)
    return EnergyAudit(energy_check(trace), trace)
