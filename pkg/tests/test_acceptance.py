"""Acceptance criteria, one test per criterion.

Each test enforces the stated tolerance and runtime budget and prints one
PASS line (visible with ``pytest -v`` or ``-s``); a failed assertion marks
the criterion FAIL.
"""
import time

import numpy as np
import pytest

from hypersolve.grid import Grid, GridFunction, NormKind, grid_norm, restrict
from hypersolve.harness import convergence_study, perturbation_study
from hypersolve.problems import (
    ProblemInstance,
    acoustics_system,
    advection_system,
    cells_in_domain,
    correctness_domain,
    elasticity_conservative_boundary,
    elasticity_system,
    pressure_wall_boundary,
    wave_to_acoustics,
)
from hypersolve.scheme import (
    BoundarySpec,
    SymmetricSystem,
    cfl_timestep,
    check_dissipativity,
    energy_check,
    solve,
    step_multi,
)

from _oracle import upwind_step_reference


class _Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.seconds, (
                f"runtime {self.elapsed:.1f}s exceeds the {self.seconds}s budget"
            )


def _report(criterion, detail):
    print(f"[ACCEPTANCE] {criterion}: PASS ({detail})")


def advection_sine_problem(T):
    return ProblemInstance(
        advection_system([1.0]),
        BoundarySpec.cauchy(1),
        lambda p: np.sin(2 * np.pi * p[..., 0]),
        T,
    )


def test_criterion_01_first_order_convergence():
    with _Budget(5) as budget:
        exact = lambda pts, t: np.sin(2 * np.pi * (pts[..., 0] - t))[..., None]
        report = convergence_study(
            advection_sine_problem(0.5), range(4, 9), NormKind("sL2"), exact, safety=0.5
        )
        assert report.status == "ok"
        assert 0.8 <= report.order <= 1.2
        assert report.residual < 0.1
    _report(
        "1 first-order convergence",
        f"order={report.order:.3f} residual={report.residual:.3f} "
        f"in {budget.elapsed:.1f}s",
    )


def test_criterion_02_exact_transport_at_courant_one():
    with _Budget(1):
        grid = Grid(1, 6)
        phi = restrict(lambda p: np.sin(2 * np.pi * p[..., 0]), grid, 1)
        sol, _ = solve(
            advection_system([1.0]), BoundarySpec.cauchy(1), phi, 1.0, safety=1.0
        )
        diff = float(np.abs(sol.levels[-1].data - phi.data).max())
        assert diff <= 1e-12
    _report("2 exact transport at Courant 1", f"max abs diff={diff:.1e}")


def _random_smooth_field(seed, n):
    rng = np.random.default_rng(seed)
    coef = rng.standard_normal((n, 3, 3, 2)) / 9.0

    def field(p):
        x, y = p[..., 0], p[..., 1]
        out = np.zeros(p.shape[:-1] + (n,))
        for c in range(n):
            for kx in range(3):
                for ky in range(3):
                    phase = 2 * np.pi * (kx * x + ky * y)
                    out[..., c] += coef[c, kx, ky, 0] * np.cos(phase)
                    out[..., c] += coef[c, kx, ky, 1] * np.sin(phase)
        return out

    return field


def test_criterion_03_energy_non_increase():
    with _Budget(60) as budget:
        # (a) 2-D acoustics, wrap, random smooth data, 200 steps
        sys2 = acoustics_system(1.0, 1.0, dim=2)
        grid = Grid(2, 5)
        phi = restrict(_random_smooth_field(2024, 3), grid, 3)
        tau = cfl_timestep(sys2, grid.h).tau
        _, trace_a = solve(sys2, BoundarySpec.cauchy(2), phi, 200 * tau)
        check_a = energy_check(trace_a)
        assert trace_a.energies.shape[0] == 201
        assert check_a.passed
        assert check_a.max_relative_increase <= 1e-12

        # (b) 3-D acoustics, p=0 walls, localized pulse: monotone decrease
        sys3 = acoustics_system(1.0, 1.0, dim=3)
        grid3 = Grid(3, 4)

        def pulse(p):
            r2 = sum((p[..., i] - 0.5) ** 2 for i in range(3))
            out = np.zeros(p.shape[:-1] + (4,))
            out[..., 3] = np.exp(-80.0 * r2)
            return out

        phi3 = restrict(pulse, grid3, 4)
        _, trace_b = solve(sys3, pressure_wall_boundary(3), phi3, 0.75)
        e = trace_b.energies
        assert (np.diff(e) <= 1e-12 * e[:-1]).all()
    _report(
        "3 energy non-increase",
        f"wrap max rel increase={check_a.max_relative_increase:.1e}, "
        f"walls monotone over {e.shape[0] - 1} steps, {budget.elapsed:.1f}s",
    )


def test_criterion_04_dissipativity_certificates():
    with _Budget(1):
        ok_acoustics = check_dissipativity(
            acoustics_system(1.0, 1.0, dim=3), pressure_wall_boundary(3)
        )
        assert ok_acoustics.passed

        ok_elastic = check_dissipativity(
            elasticity_system(1.0, 1.0, 1.0), elasticity_conservative_boundary()
        )
        assert ok_elastic.passed

        bad = check_dissipativity(
            SymmetricSystem(np.eye(2), (np.diag([1.0, -1.0]),)),
            BoundarySpec.walls([(np.array([[0.0, 1.0]]), np.array([[0.0, 1.0]]))]),
        )
        assert not bad.passed
        witness = bad.witness()
        assert witness is not None
        np.testing.assert_allclose(np.abs(witness), [1.0, 0.0], atol=1e-12)
    _report(
        "4 dissipativity certificates",
        "acoustics walls PASS, elasticity conservative PASS, counterexample "
        "FAIL with witness",
    )


def test_criterion_05_wave_equation_standing_mode():
    with _Budget(120) as budget:
        mode = lambda p: (
            np.sin(np.pi * p[..., 0])
            * np.sin(np.pi * p[..., 1])
            * np.sin(np.pi * p[..., 2])
        )
        problem = wave_to_acoustics(
            mode, lambda p: np.zeros(p.shape[:-1]), 1.0, 1.0, T_final=0.25
        )
        errors = {}
        for k in (4, 5):
            grid = Grid(3, k)
            phi = restrict(problem.initial_for_grid(grid), grid, 4)
            sol, _ = solve(problem.system, problem.boundary, phi, problem.T_final)
            pts = grid.center_points()
            exact_p = mode(pts) * np.cos(np.sqrt(3.0) * np.pi * problem.T_final)
            errors[k] = float(np.abs(sol.levels[-1].data[..., 3] - exact_p).max())
        assert errors[5] < 0.15
        assert errors[4] / errors[5] >= 1.5
    _report(
        "5 wave-equation standing mode",
        f"sup errors k4={errors[4]:.4f} k5={errors[5]:.4f} "
        f"ratio={errors[4] / errors[5]:.2f} in {budget.elapsed:.1f}s",
    )


def test_criterion_06_domain_of_correctness():
    with _Budget(1):
        system = acoustics_system(1.0, 1.0, dim=1)
        domain = correctness_domain(system)
        assert domain.lambda_min == (-1.0,) and domain.lambda_max == (1.0,)
        assert domain.is_compact
        # triangle t >= 0, t <= x <= 1 - t with apex at t = 1/2
        assert domain.contains([0.5], 0.5)
        assert not domain.contains([0.5], 0.500001)
        assert domain.contains([0.3], 0.3) and not domain.contains([0.29], 0.3)

        grid = Grid(1, 3)
        for t in (0.0, 0.25, 0.4):
            got = cells_in_domain(grid, domain, t)
            expected = np.zeros(grid.cells_per_axis, dtype=bool)
            for cell in range(grid.cells_per_axis):
                corners_ok = True
                for corner in (cell * grid.h, (cell + 1) * grid.h):
                    if not (t >= 0 and corner - t >= 0 and corner - 1 + t <= 0):
                        corners_ok = False
                if corners_ok:
                    expected[cell] = True
            np.testing.assert_array_equal(got, expected), t
    _report("6 domain of correctness", "triangle apex 0.5, masks match oracle")


def test_criterion_07_scheme_oracle_equivalence():
    with _Budget(1):
        rng = np.random.default_rng(99)
        A = np.array([[1.5, 0.4], [0.4, 2.0]])
        B1 = np.array([[0.7, 1.0], [1.0, -0.5]])
        B2 = np.array([[0.2, -0.8], [-0.8, 0.6]])
        system = SymmetricSystem(A, (B1, B2))
        grid = Grid(2, 2)
        u = GridFunction(grid, rng.standard_normal((4, 4, 2)))
        tau = cfl_timestep(system, grid.h, 0.85).tau
        got = step_multi(u, system, BoundarySpec.cauchy(2), tau)
        ref = upwind_step_reference(
            u.data, system.A.a, [b.a for b in system.B], system.transforms, tau, grid.h
        )
        diff = float(np.abs(got.data - ref).max())
        assert diff <= 1e-12
    _report("7 scheme oracle equivalence", f"max abs diff={diff:.1e}")


def test_criterion_08_coefficient_continuity():
    with _Budget(30) as budget:
        initial = lambda p: np.stack(
            [np.sin(2 * np.pi * p[..., 0]), np.cos(2 * np.pi * p[..., 0])], axis=-1
        )
        problem = ProblemInstance(
            acoustics_system(1.0, 1.0, dim=1), BoundarySpec.cauchy(1), initial, 0.5
        )
        report = perturbation_study(problem, range(4, 13), k=5, seed=0)
        assert report.slope == pytest.approx(1.0, abs=0.3)
    _report(
        "8 coefficient continuity",
        f"slope={report.slope:.3f} over eps=2^-4..2^-12 in {budget.elapsed:.1f}s",
    )


def test_criterion_09_stability_violation():
    with _Budget(1):
        grid = Grid(1, 5)
        phi = restrict(lambda p: np.sin(2 * np.pi * p[..., 0]), grid, 1)
        system = advection_system([1.0])
        tau = cfl_timestep(system, grid.h, 1.5, enforce=False).tau
        sol, _ = solve(
            system,
            BoundarySpec.cauchy(1),
            phi,
            100 * tau,
            safety=1.5,
            enforce_cfl=False,
        )
        growth = max(
            grid_norm(lev, NormKind("L2")) for lev in sol.levels
        ) / grid_norm(sol.levels[0], NormKind("L2"))
        assert sol.num_steps <= 100
        assert growth >= 10.0
    _report("9 stability violation demo", f"sL2 grew {growth:.1e}x in 100 steps")


def test_criterion_10_determinism(tmp_path):
    from hypersolve.cli import main

    config = tmp_path / "converge.yaml"
    config.write_text(
        """
problem:
  builtin: advection
  speeds: [1.0]
initial:
  components: ["sin(2*pi*x)"]
run:
  T_final: 0.5
  k_range: [4, 6]
  safety: 0.5
  seed: 0
"""
    )
    blobs = []
    for name in ("first", "second"):
        out = tmp_path / name
        assert main(["converge", "--config", str(config), "--out", str(out)]) == 0
        blobs.append((out / "converge.csv").read_bytes())
    assert blobs[0] == blobs[1]
    _report("10 determinism", f"byte-identical CSVs ({len(blobs[0])} bytes)")
