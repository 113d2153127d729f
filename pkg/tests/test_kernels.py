"""Backend parity: the compiled sweep kernels must match the numpy fallback
bit for bit (same operation order, FMA contraction disabled)."""
import numpy as np
import pytest

from hypersolve import _backend
from hypersolve._backend import available_backends, get_backend

HAVE_C = "c" in available_backends()

needs_c = pytest.mark.skipif(not HAVE_C, reason="compiled kernels not built")


def random_case(seed, wrap):
    rng = np.random.default_rng(seed)
    P, N, n = int(rng.integers(1, 5)), int(rng.integers(1, 9)), int(rng.integers(1, 5))
    v = rng.standard_normal((P, N, n))
    a = rng.uniform(0.0, 1.0, size=n)
    sgn = rng.integers(-1, 2, size=n).astype(np.int64)
    a[sgn == 0] = 0.0
    if wrap:
        lo = hi = None
    else:
        lo = rng.standard_normal((P, n))
        hi = rng.standard_normal((P, n))
    return v, a, sgn, lo, hi


class TestFallbackSemantics:
    def test_positive_sign_upwinds_left_with_wrap(self):
        py = get_backend("python")
        v = np.array([[[1.0], [2.0], [3.0]]])
        a = np.array([1.0])
        sgn = np.array([1], dtype=np.int64)
        out = py.axis_sweep_convex(v, a, sgn, None, None, True)
        np.testing.assert_array_equal(out[0, :, 0], [3.0, 1.0, 2.0])

    def test_negative_sign_upwinds_right_with_wrap(self):
        py = get_backend("python")
        v = np.array([[[1.0], [2.0], [3.0]]])
        a = np.array([1.0])
        sgn = np.array([-1], dtype=np.int64)
        out = py.axis_sweep_convex(v, a, sgn, None, None, True)
        np.testing.assert_array_equal(out[0, :, 0], [2.0, 3.0, 1.0])

    def test_zero_sign_identity(self):
        py = get_backend("python")
        rng = np.random.default_rng(0)
        v = rng.standard_normal((2, 4, 1))
        out = py.axis_sweep_convex(
            v, np.array([0.0]), np.array([0], dtype=np.int64), None, None, True
        )
        np.testing.assert_array_equal(out, v)

    def test_boundary_fill_used_at_faces(self):
        py = get_backend("python")
        v = np.array([[[1.0], [2.0]]])
        a = np.array([0.5])
        sgn = np.array([1], dtype=np.int64)
        lo = np.array([[10.0]])
        out = py.axis_sweep_convex(v, a, sgn, lo, np.zeros((1, 1)), False)
        # first cell pulls from the supplied face value
        np.testing.assert_allclose(out[0, :, 0], [5.5, 1.5])

    def test_delta_matches_convex(self):
        # v_new == v - delta must hold algebraically; check to roundoff
        py = get_backend("python")
        v, a, sgn, lo, hi = random_case(7, wrap=True)
        conv = py.axis_sweep_convex(v, a, sgn, lo, hi, True)
        delta = py.axis_sweep_delta(v, a, sgn, lo, hi, True)
        np.testing.assert_allclose(conv, v - delta, atol=1e-14)


@needs_c
class TestBackendParity:
    @pytest.mark.parametrize("seed", range(12))
    @pytest.mark.parametrize("wrap", [True, False])
    def test_bitwise_equal(self, seed, wrap):
        c = get_backend("c")
        py = get_backend("python")
        v, a, sgn, lo, hi = random_case(seed, wrap)
        for fn in ("axis_sweep_convex", "axis_sweep_delta"):
            out_c = getattr(c, fn)(v, a, sgn, lo, hi, wrap)
            out_py = getattr(py, fn)(v, a, sgn, lo, hi, wrap)
            assert np.array_equal(out_c, out_py), fn

    def test_courant_one_is_exact_shift(self):
        c = get_backend("c")
        rng = np.random.default_rng(42)
        v = rng.standard_normal((1, 16, 1))
        out = c.axis_sweep_convex(
            v, np.array([1.0]), np.array([1], dtype=np.int64), None, None, True
        )
        np.testing.assert_array_equal(out[0, :, 0], np.roll(v[0, :, 0], 1))

    def test_full_step_bitwise_across_backends(self):
        from hypersolve.grid import Grid, GridFunction
        from hypersolve.problems import acoustics_system, pressure_wall_boundary
        from hypersolve.scheme import cfl_timestep, step_multi

        system = acoustics_system(1.0, 1.0, dim=2)
        grid = Grid(2, 3)
        rng = np.random.default_rng(13)
        u = GridFunction(grid, rng.standard_normal((8, 8, 3)))
        tau = cfl_timestep(system, grid.h, 0.9).tau
        boundary = pressure_wall_boundary(2)
        results = {}
        saved = (_backend.axis_sweep_convex, _backend.axis_sweep_delta)
        try:
            for name in ("c", "python"):
                impl = get_backend(name)
                _backend.axis_sweep_convex = impl.axis_sweep_convex
                _backend.axis_sweep_delta = impl.axis_sweep_delta
                results[name] = step_multi(u, system, boundary, tau).data
        finally:
            _backend.axis_sweep_convex, _backend.axis_sweep_delta = saved
        assert np.array_equal(results["c"], results["python"])


class TestSelection:
    def test_active_backend_reported(self):
        assert _backend.BACKEND in ("c", "python")

    def test_unknown_backend_rejected(self):
        with pytest.raises(ValueError):
            get_backend("fortran")
