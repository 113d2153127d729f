"""Command-line front end.

    hypersolve <command> --config <path> [--out <dir>] [--seed <u64>]
                                          [--safety <f>]

Commands and their artifacts (written under --out, default "."):

* ``solve``    - solution.hsgf (binary dump) and energy.csv
* ``converge`` - converge.csv and converge_summary.txt
* ``check``    - check_report.txt (dissipativity, CFL, domain of
  correctness); never writes solution data
* ``perturb``  - perturb.csv and perturb_summary.txt

Exit codes: 0 success, 2 validation failure, 3 numerical failure
(instability / NaN).  Diagnostics go to stderr.  Identical config and seed
produce byte-identical outputs.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import ConfigValidationError, RunConfig, parse_config
from .errors import (
    HypersolveError,
    NumericalInstabilityError,
    StabilityError,
)
from .grid import Grid, NormKind, restrict, write_dump
from .harness import convergence_study, perturbation_study, write_csv
from .problems import cells_in_domain, correctness_domain
from .scheme import cfl_timestep, check_dissipativity, energy_check, solve

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypersolve",
        description="Upwind splitting solver for symmetric hyperbolic systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("solve", "run the solver and dump the space-time solution"),
        ("converge", "measure the empirical convergence order"),
        ("check", "certify dissipativity, CFL and the domain of correctness"),
        ("perturb", "measure the response to coefficient perturbations"),
    ):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--seed", type=int, default=None, help="override run.seed")
        p.add_argument("--safety", type=float, default=None, help="override run.safety")
    return parser


def _cmd_solve(cfg: RunConfig, out: Path) -> int:
    grid = Grid(cfg.problem.system.m, cfg.k)
    phi = restrict(cfg.problem.initial_for_grid(grid), grid, cfg.problem.system.n)
    sol, trace = solve(
        cfg.problem.system, cfg.problem.boundary, phi, cfg.problem.T_final, cfg.safety
    )
    write_dump(out / "solution.hsgf", sol)
    write_csv(
        out / "energy.csv",
        ["level", "time", "energy"],
        ((l, float(t), float(e)) for l, (t, e) in enumerate(zip(trace.times, trace.energies))),
    )
    check = energy_check(trace)
    print(
        f"solve: {sol.num_steps} steps, tau={sol.tau:.6e}, "
        f"energy {'nonincreasing' if check.passed else 'INCREASED'}"
    )
    return EXIT_OK


def _cmd_converge(cfg: RunConfig, out: Path) -> int:
    lo, hi = cfg.k_range
    report = convergence_study(
        cfg.problem,
        range(lo, hi + 1),
        NormKind(cfg.norm_tag),
        "richardson",
        safety=cfg.safety,
    )
    report.to_csv(out / "converge.csv")
    (out / "converge_summary.txt").write_text(report.summary())
    print(report.summary(), end="")
    return EXIT_OK


def _cmd_perturb(cfg: RunConfig, out: Path) -> int:
    lo, hi = cfg.j_range
    report = perturbation_study(
        cfg.problem,
        range(lo, hi + 1),
        k=cfg.k,
        seed=cfg.seed,
        safety=min(cfg.safety, 0.7),
        draws=cfg.draws,
    )
    report.to_csv(out / "perturb.csv")
    (out / "perturb_summary.txt").write_text(report.summary())
    print(report.summary(), end="")
    return EXIT_OK


def _cmd_check(cfg: RunConfig, out: Path) -> int:
    system, boundary = cfg.problem.system, cfg.problem.boundary
    lines = []

    wrap_axes = [a for a in range(1, system.m + 1) if boundary.is_wrap(a)]
    for a in wrap_axes:
        lines.append(f"axis {a}: periodic wrap (no dissipativity condition)")
    report = check_dissipativity(system, boundary)
    for face in report.faces:
        status = "PASS" if face.passed else "FAIL"
        lines.append(
            f"axis {face.axis} {face.side}: dissipative: {status} "
            f"(worst eigenvalue {face.worst_eigenvalue:.3e})"
        )
        if face.witness is not None:
            lines.append(f"  witness: {np.array2string(face.witness, precision=6)}")

    k = cfg.k if cfg.k is not None else 4
    h = Grid(system.m, k).h
    step = cfl_timestep(system, h, cfg.safety)
    lines.append(
        f"CFL at k={k}: tau={step.tau:.6e}, courant=" +
        ", ".join(f"{c:.4f}" for c in step.courant_numbers)
    )

    domain = correctness_domain(system)
    lines.append(
        "domain of correctness: lambda_min="
        + np.array2string(np.array(domain.lambda_min), precision=6)
        + " lambda_max="
        + np.array2string(np.array(domain.lambda_max), precision=6)
        + f" compact={domain.is_compact}"
    )
    if domain.is_compact:
        for t in (0.0, 0.25):
            count = int(cells_in_domain(Grid(system.m, k), domain, t).sum())
            lines.append(f"cells inside H at t={t}: {count} of {Grid(system.m, k).num_cells}")

    text = "\n".join(lines) + "\n"
    (out / "check_report.txt").write_text(text)
    print(text, end="")
    return EXIT_OK if report.passed else EXIT_VALIDATION


_COMMANDS = {
    "solve": _cmd_solve,
    "converge": _cmd_converge,
    "check": _cmd_check,
    "perturb": _cmd_perturb,
}


def run(cfg: RunConfig, out_dir) -> int:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return _COMMANDS[cfg.command](cfg, out)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, args.command)
        if args.seed is not None or args.safety is not None:
            import dataclasses

            updates = {}
            if args.seed is not None:
                updates["seed"] = args.seed
            if args.safety is not None:
                if not 0.0 < args.safety <= 1.0:
                    raise ConfigValidationError(["--safety: must be in (0, 1]"])
                updates["safety"] = args.safety
            cfg = dataclasses.replace(cfg, **updates)
        return run(cfg, args.out)
    except ConfigValidationError as exc:
        for finding in exc.findings:
            print(f"config error: {finding}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalInstabilityError, StabilityError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except HypersolveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
