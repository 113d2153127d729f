"""Run configuration: YAML schema, validation and the initial-data
expression grammar.

A config has three sections (documented in docs/config.md):

* ``problem``  - a builtin (advection, acoustics, elasticity, wave) or
  explicit matrices,
* ``initial``  - one expression per component over (x, y, z) with +, -, *,
  /, sin, cos, exp, pi and numeric constants,
* ``boundary`` - per axis ``wrap`` or {low, high} matrices on the physical
  variables,
* ``run``      - horizon, grid level(s), safety factor, norm, seed, and the
  perturbation exponents.

``parse_config`` validates everything it can before any compute and reports
*all* findings, each with the path of the offending field.
"""
from __future__ import annotations

import ast
from dataclasses import dataclass
from typing import Callable

import numpy as np
import yaml

from .errors import InputDataError, UsageError
from .problems import (
    ProblemInstance,
    WaveInitialData,
    acoustics_system,
    advection_system,
    elasticity_system,
    pressure_wall_boundary,
)
from .scheme import (
    CAUCHY_WRAP,
    BoundarySpec,
    DissipativeFace,
    SymmetricSystem,
    validate_boundary,
)

_ASYMMETRY_LIMIT = 1e-9
_COORDS = ("x", "y", "z")
_FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_BIN_OPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
}
_UNARY_OPS = {ast.UAdd: lambda v: v, ast.USub: np.negative}


class ConfigValidationError(InputDataError):
    """Carries every validation finding, not just the first."""

    def __init__(self, findings):
        self.findings = list(findings)
        super().__init__("; ".join(self.findings))


# ---------------------------------------------------------------------------
# expression grammar


def compile_expression(text: str, m: int) -> Callable[[np.ndarray], np.ndarray]:
    """Compile an initial-data expression over the first ``m`` coordinates.

    Allowed: numbers, x/y/z (up to m), pi, + - * /, unary sign, and the
    calls sin/cos/exp.  Anything else is rejected.
    """
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise UsageError(f"bad expression {text!r}: {exc.msg}") from exc
    allowed = _COORDS[:m]
    _check_node(tree.body, text, allowed)

    def evaluate(points: np.ndarray) -> np.ndarray:
        env = {name: points[..., i] for i, name in enumerate(allowed)}
        env["pi"] = np.pi
        result = _eval_node(tree.body, env)
        return np.broadcast_to(np.asarray(result, dtype=np.float64), points.shape[:-1])

    return evaluate


def _check_node(node, text, allowed):
    if isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            raise UsageError(f"bad expression {text!r}: literal {node.value!r}")
    elif isinstance(node, ast.Name):
        if node.id not in allowed and node.id != "pi":
            raise UsageError(
                f"bad expression {text!r}: unknown name {node.id!r} "
                f"(coordinates available: {', '.join(allowed)})"
            )
    elif isinstance(node, ast.BinOp) and type(node.op) in _BIN_OPS:
        _check_node(node.left, text, allowed)
        _check_node(node.right, text, allowed)
    elif isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY_OPS:
        _check_node(node.operand, text, allowed)
    elif isinstance(node, ast.Call):
        if not (isinstance(node.func, ast.Name) and node.func.id in _FUNCTIONS):
            raise UsageError(f"bad expression {text!r}: only sin, cos, exp may be called")
        if len(node.args) != 1 or node.keywords:
            raise UsageError(f"bad expression {text!r}: functions take one argument")
        _check_node(node.args[0], text, allowed)
    else:
        raise UsageError(f"bad expression {text!r}: unsupported syntax {type(node).__name__}")


def _eval_node(node, env):
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return env[node.id]
    if isinstance(node, ast.BinOp):
        return _BIN_OPS[type(node.op)](_eval_node(node.left, env), _eval_node(node.right, env))
    if isinstance(node, ast.UnaryOp):
        return _UNARY_OPS[type(node.op)](_eval_node(node.operand, env))
    if isinstance(node, ast.Call):
        return _FUNCTIONS[node.func.id](_eval_node(node.args[0], env))
    raise AssertionError("unreachable: expression was validated")


def vector_expression(components, m: int) -> Callable[[np.ndarray], np.ndarray]:
    fns = [compile_expression(c, m) for c in components]
    return lambda pts: np.stack([f(pts) for f in fns], axis=-1)


# ---------------------------------------------------------------------------
# config parsing


@dataclass(frozen=True)
class RunConfig:
    command: str
    problem: ProblemInstance
    k: int | None
    k_range: tuple[int, int] | None
    safety: float
    norm_tag: str
    seed: int
    j_range: tuple[int, int]
    draws: int


class _Collector:
    def __init__(self):
        self.findings = []

    def error(self, path, message):
        self.findings.append(f"{path}: {message}")

    def require(self, mapping, path, key, types, default=None, required=False):
        if key not in mapping:
            if required:
                self.error(f"{path}.{key}", "required field is missing")
            return default
        value = mapping[key]
        bad_bool = isinstance(value, bool) and bool not in (
            types if isinstance(types, tuple) else (types,)
        )
        if types is not None and (bad_bool or not isinstance(value, types)):
            names = "/".join(
                t.__name__ for t in (types if isinstance(types, tuple) else (types,))
            )
            self.error(f"{path}.{key}", f"expected {names}, got {type(value).__name__}")
            return default
        return value

    def raise_if_any(self):
        if self.findings:
            raise ConfigValidationError(self.findings)


def _parse_matrix(raw, path, col: _Collector):
    try:
        arr = np.asarray(raw, dtype=np.float64)
    except (TypeError, ValueError):
        col.error(path, "not a numeric matrix")
        return None
    if arr.ndim != 2:
        col.error(path, f"expected a matrix, got array of rank {arr.ndim}")
        return None
    return arr


def _parse_symmetric(raw, path, col: _Collector):
    arr = _parse_matrix(raw, path, col)
    if arr is None:
        return None
    if arr.shape[0] != arr.shape[1]:
        col.error(path, f"matrix is {arr.shape[0]}x{arr.shape[1]}, must be square")
        return None
    if np.abs(arr - arr.T).max() > _ASYMMETRY_LIMIT * (1.0 + np.abs(arr).max()):
        col.error(path, f"asymmetry exceeds {_ASYMMETRY_LIMIT}")
        return None
    return arr


def _build_system(problem: dict, col: _Collector):
    builtin = col.require(problem, "problem", "builtin", str, required=True)
    if builtin is None:
        return None, None, None
    if builtin == "advection":
        speeds = col.require(problem, "problem", "speeds", list, required=True)
        if speeds is None:
            return None, None, None
        try:
            return advection_system(speeds), None, None
        except (UsageError, ValueError) as exc:
            col.error("problem.speeds", str(exc))
            return None, None, None
    if builtin == "acoustics":
        rho0 = col.require(problem, "problem", "rho0", (int, float), default=1.0)
        c0 = col.require(problem, "problem", "c0", (int, float), default=1.0)
        dim = col.require(problem, "problem", "dim", int, default=3)
        try:
            return acoustics_system(float(rho0), float(c0), dim=dim), None, None
        except Exception as exc:
            col.error("problem", str(exc))
            return None, None, None
    if builtin == "elasticity":
        rho = col.require(problem, "problem", "rho", (int, float), required=True)
        lam = col.require(problem, "problem", "lam", (int, float), required=True)
        mu = col.require(problem, "problem", "mu", (int, float), required=True)
        if None in (rho, lam, mu):
            return None, None, None
        try:
            return elasticity_system(float(rho), float(lam), float(mu)), None, None
        except Exception as exc:
            col.error("problem", str(exc))
            return None, None, None
    if builtin == "wave":
        rho0 = col.require(problem, "problem", "rho0", (int, float), default=1.0)
        c0 = col.require(problem, "problem", "c0", (int, float), default=1.0)
        phi_src = col.require(problem, "problem", "phi", str, required=True)
        psi_src = col.require(problem, "problem", "psi", str, default="0")
        if phi_src is None:
            return None, None, None
        try:
            phi = compile_expression(phi_src, 3)
            psi = compile_expression(psi_src, 3)
        except UsageError as exc:
            col.error("problem.phi/psi", str(exc))
            return None, None, None
        initial = WaveInitialData(phi, psi, float(rho0), float(c0))
        try:
            system = acoustics_system(float(rho0), float(c0), dim=3)
        except Exception as exc:
            col.error("problem", str(exc))
            return None, None, None
        return system, pressure_wall_boundary(3), initial
    if builtin == "explicit":
        matrices = col.require(problem, "problem", "matrices", dict, required=True)
        if matrices is None:
            return None, None, None
        A = _parse_symmetric(matrices.get("A"), "problem.matrices.A", col)
        raw_bs = matrices.get("B")
        if not isinstance(raw_bs, list) or not raw_bs:
            col.error("problem.matrices.B", "expected a non-empty list of matrices")
            return None, None, None
        Bs = [
            _parse_symmetric(b, f"problem.matrices.B[{i}]", col)
            for i, b in enumerate(raw_bs)
        ]
        if A is None or any(b is None for b in Bs):
            return None, None, None
        try:
            return SymmetricSystem(A, tuple(Bs)), None, None
        except Exception as exc:
            col.error("problem.matrices", str(exc))
            return None, None, None
    col.error("problem.builtin", f"unknown builtin {builtin!r}")
    return None, None, None


def _build_boundary(section, system, col: _Collector):
    if system is None:
        return None
    m = system.m
    if section is None:
        return BoundarySpec.cauchy(m)
    if not isinstance(section, dict):
        col.error("boundary", "expected a mapping axis1/axis2/axis3")
        return None
    faces = {}
    for axis in range(1, m + 1):
        key = f"axis{axis}"
        entry = section.get(key, "wrap")
        if entry == "wrap":
            faces[(axis, "low")] = CAUCHY_WRAP
            faces[(axis, "high")] = CAUCHY_WRAP
            continue
        if not isinstance(entry, dict) or set(entry) != {"low", "high"}:
            col.error(f"boundary.{key}", "expected 'wrap' or a {low, high} mapping")
            return None
        lo = _parse_matrix(entry["low"], f"boundary.{key}.low", col)
        hi = _parse_matrix(entry["high"], f"boundary.{key}.high", col)
        if lo is None or hi is None:
            return None
        faces[(axis, "low")] = DissipativeFace(lo)
        faces[(axis, "high")] = DissipativeFace(hi)
    extra = set(section) - {f"axis{a}" for a in range(1, m + 1)}
    for key in sorted(extra):
        col.error(f"boundary.{key}", f"system has only {m} axes")
    try:
        boundary = BoundarySpec(faces)
        validate_boundary(system, boundary)
    except UsageError as exc:
        col.error("boundary", str(exc))
        return None
    return boundary


def parse_config(path, command: str) -> RunConfig:
    """Load and fully validate a YAML run configuration.

    Raises :class:`ConfigValidationError` carrying every finding, or
    :class:`InputDataError` for unreadable/unparsable files.
    """
    if command not in ("solve", "converge", "check", "perturb"):
        raise UsageError(f"unknown command {command!r}")
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise InputDataError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise InputDataError(f"config syntax error{where}: {exc}") from exc
    if not isinstance(raw, dict):
        raise InputDataError("config root must be a mapping")

    col = _Collector()
    problem_sec = col.require(raw, "config", "problem", dict, required=True) or {}
    run_sec = col.require(raw, "config", "run", dict, default={}) or {}

    system, forced_boundary, wave_initial = _build_system(problem_sec, col)

    if forced_boundary is not None and "boundary" in raw:
        col.error("boundary", "the wave builtin fixes p=0 walls; remove this section")
    boundary = forced_boundary
    if boundary is None:
        boundary = _build_boundary(raw.get("boundary"), system, col)

    initial = wave_initial
    if initial is None and system is not None:
        init_sec = raw.get("initial")
        if command == "check" and init_sec is None:
            initial = _zero_initial(system.n)
        else:
            comps = None
            if isinstance(init_sec, dict):
                comps = init_sec.get("components")
            if not isinstance(comps, list) or len(comps) != system.n:
                col.error(
                    "initial.components",
                    f"expected {system.n} expressions (one per component)",
                )
            else:
                try:
                    initial = vector_expression([str(c) for c in comps], system.m)
                except UsageError as exc:
                    col.error("initial.components", str(exc))

    T_final = col.require(
        run_sec, "run", "T_final", (int, float), default=0.0, required=command != "check"
    )
    if T_final is not None and T_final < 0:
        col.error("run.T_final", "must be nonnegative")
    safety = col.require(run_sec, "run", "safety", (int, float), default=1.0)
    if safety is not None and not 0.0 < safety <= 1.0:
        col.error("run.safety", "must be in (0, 1]")
    seed = col.require(run_sec, "run", "seed", int, default=0)
    draws = col.require(run_sec, "run", "draws", int, default=3)
    norm_tag = col.require(run_sec, "run", "norm", str, default="sL2")
    if norm_tag not in ("sL2", "sup"):
        col.error("run.norm", f"expected sL2 or sup, got {norm_tag!r}")

    k = col.require(run_sec, "run", "k", int, required=command in ("solve", "perturb"))
    if k is not None and not 0 <= k <= 52:
        col.error("run.k", "must be in 0..52")
    k_range = None
    if command == "converge":
        kr = col.require(run_sec, "run", "k_range", list, required=True)
        if kr is not None:
            if len(kr) != 2 or not all(isinstance(v, int) for v in kr) or kr[0] >= kr[1]:
                col.error("run.k_range", "expected [k_lo, k_hi] with k_lo < k_hi")
            elif kr[1] - kr[0] < 2:
                col.error("run.k_range", "needs at least 3 levels")
            else:
                k_range = (kr[0], kr[1])

    jr = col.require(run_sec, "run", "j_range", list, default=[4, 12])
    j_range = (4, 12)
    if jr is not None:
        if len(jr) != 2 or not all(isinstance(v, int) for v in jr) or jr[0] > jr[1]:
            col.error("run.j_range", "expected [j_lo, j_hi] with j_lo <= j_hi")
        else:
            j_range = (jr[0], jr[1])

    col.raise_if_any()

    try:
        # `check` must be able to hold a non-dissipative boundary: reporting
        # the violation is exactly its job
        problem = ProblemInstance(
            system,
            boundary,
            initial,
            float(T_final),
            enforce_dissipative=command != "check",
        )
    except Exception as exc:
        raise ConfigValidationError([f"problem: {exc}"]) from exc

    return RunConfig(
        command=command,
        problem=problem,
        k=k,
        k_range=k_range,
        safety=float(safety),
        norm_tag=norm_tag,
        seed=int(seed),
        j_range=j_range,
        draws=int(draws),
    )


def _zero_initial(n: int):
    return lambda pts: np.zeros(pts.shape[:-1] + (n,))
