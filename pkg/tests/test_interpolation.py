"""Multilinear interpolation and the quadrature helpers."""
import numpy as np
import pytest

from hypersolve.errors import UsageError
from hypersolve.grid import Grid, GridFunction, SpaceTimeGridFunction, restrict
from hypersolve.interpolation import (
    interpolate,
    interpolate_spacetime,
    interpolation_error_estimate,
    midpoint_quadrature,
)


def gf(k, values, m=1):
    vals = np.asarray(values, dtype=float)
    if vals.ndim == m:
        vals = vals[..., None]
    return GridFunction(Grid(m, k), vals)


class TestInterpolate:
    def test_1d_values(self):
        f = interpolate(gf(1, [1.0, 3.0]))
        assert f([0.25]) == pytest.approx(1.0, abs=1e-14)
        assert f([0.75]) == pytest.approx(3.0, abs=1e-14)
        assert f([0.5]) == pytest.approx(2.0, abs=1e-14)

    def test_clamped_margin(self):
        f = interpolate(gf(1, [1.0, 3.0]))
        assert f([0.0]) == pytest.approx(1.0, abs=1e-15)
        assert f([1.0]) == pytest.approx(3.0, abs=1e-15)

    def test_linear_reproduction_interior(self):
        g = Grid(1, 3)
        u = restrict(lambda p: 2.0 + 5.0 * p[..., 0], g)
        f = interpolate(u)
        xs = np.linspace(g.h / 2, 1 - g.h / 2, 33)
        vals = f(xs[:, None])[:, 0]
        np.testing.assert_allclose(vals, 2.0 + 5.0 * xs, atol=1e-13)

    def test_constant(self):
        g = Grid(2, 2)
        u = restrict(lambda p: np.full(p.shape[:-1], 4.25), g)
        f = interpolate(u)
        rng = np.random.default_rng(0)
        pts = rng.uniform(0, 1, size=(50, 2))
        assert np.abs(f(pts) - 4.25).max() <= 1e-14

    def test_cell_centers_exact(self):
        rng = np.random.default_rng(1)
        g = Grid(2, 2)
        u = GridFunction(g, rng.standard_normal((4, 4, 2)))
        f = interpolate(u)
        pts = g.center_points().reshape(-1, 2)
        np.testing.assert_allclose(
            f(pts).reshape(u.data.shape), u.data, atol=1e-14
        )

    def test_outside_domain_rejected(self):
        f = interpolate(gf(1, [1.0, 2.0]))
        with pytest.raises(UsageError):
            f([1.5])
        with pytest.raises(UsageError):
            f([-0.01])

    @pytest.mark.parametrize("seed", range(4))
    def test_linearity(self, seed):
        rng = np.random.default_rng(seed)
        g = Grid(2, 2)
        a = rng.standard_normal((4, 4, 2))
        b = rng.standard_normal((4, 4, 2))
        al, be = 1.7, -0.3
        pts = rng.uniform(0, 1, size=(40, 2))
        combo = interpolate(GridFunction(g, al * a + be * b))(pts)
        parts = al * interpolate(GridFunction(g, a))(pts) + be * interpolate(
            GridFunction(g, b)
        )(pts)
        assert np.abs(combo - parts).max() <= 1e-12

    @pytest.mark.parametrize("seed", range(4))
    def test_l2_nonexpansion_quadrature(self, seed):
        # the interpolation operator has Lebesgue constant 1: its continuous
        # L2 norm (midpoint quadrature) never exceeds the grid L2 norm
        from hypersolve.grid import NormKind, grid_norm
        from hypersolve.interpolation import midpoint_quadrature

        rng = np.random.default_rng(70 + seed)
        g = Grid(2, 3)
        u = GridFunction(g, rng.standard_normal((8, 8, 2)))
        pts, w = midpoint_quadrature(2, 6)
        vals = interpolate(u)(pts)
        continuous = np.sqrt(w * np.sum(vals * vals))
        assert continuous <= grid_norm(u, NormKind("L2")) * (1.0 + 1e-12)

    @pytest.mark.parametrize("seed", range(4))
    def test_max_principle_and_nonexpansion(self, seed):
        rng = np.random.default_rng(10 + seed)
        g = Grid(3, 1)
        u = GridFunction(g, rng.standard_normal((2, 2, 2, 1)))
        f = interpolate(u)
        pts = rng.uniform(0, 1, size=(200, 3))
        vals = f(pts)[:, 0]
        assert vals.max() <= u.data.max() + 1e-14
        assert vals.min() >= u.data.min() - 1e-14
        # sup non-expansion is the max principle for vector norms, sampled
        assert np.abs(vals).max() <= np.abs(u.data).max() + 1e-14


class TestSpacetime:
    def make(self):
        g = Grid(1, 1)
        levels = tuple(
            GridFunction(g, np.array([[float(l)], [float(l + 1)]])) for l in range(3)
        )
        return SpaceTimeGridFunction(g, 0.5, levels, T_final=1.0)

    def test_time_node_consistency(self):
        st = self.make()
        f = interpolate_spacetime(st)
        for l in range(3):
            expected = interpolate(st.levels[l])([0.4])
            np.testing.assert_array_equal(f([0.4], 0.5 * l), expected)

    def test_midpoint_in_time(self):
        st = self.make()
        f = interpolate_spacetime(st)
        p = f([0.25], 0.25)[0]
        lo = interpolate(st.levels[0])([0.25])[0]
        hi = interpolate(st.levels[1])([0.25])[0]
        assert p == pytest.approx((lo + hi) / 2.0, abs=1e-15)

    def test_identical_levels_time_independent(self):
        g = Grid(1, 1)
        lev = GridFunction(g, np.array([[2.0], [5.0]]))
        st = SpaceTimeGridFunction(g, 0.25, (lev, lev, lev), T_final=0.5)
        f = interpolate_spacetime(st)
        # x=0.6 sits 0.7 of the way from center 0.25 to 0.75: 0.3*2 + 0.7*5
        for t in (0.0, 0.1, 0.3, 0.5):
            assert f([0.6], t)[0] == pytest.approx(4.1, abs=1e-14)

    def test_outside_time_rejected(self):
        f = interpolate_spacetime(self.make())
        with pytest.raises(UsageError):
            f([0.5], 1.5)
        with pytest.raises(UsageError):
            f([0.5], -0.1)

    def test_shortened_final_step(self):
        g = Grid(1, 1)
        levels = tuple(
            GridFunction(g, np.full((2, 1), float(l))) for l in range(3)
        )
        st = SpaceTimeGridFunction(g, 0.5, levels, T_final=0.75)
        f = interpolate_spacetime(st)
        # level times are 0, 0.5, 0.75; halfway through the short last step
        assert f([0.5], 0.625)[0] == pytest.approx(1.5, abs=1e-14)


class TestErrorEstimate:
    def test_linear_exact(self):
        table = interpolation_error_estimate(lambda p: 1.0 - 2.0 * p[..., 0], range(2, 6))
        for _, err in table:
            assert err <= 1e-12

    def test_constant_exact(self):
        table = interpolation_error_estimate(
            lambda p: np.full(p.shape[:-1], 3.0), range(2, 5)
        )
        assert max(err for _, err in table) == 0.0

    def test_quadratic_decay(self):
        table = interpolation_error_estimate(lambda p: p[..., 0] ** 2, range(3, 8))
        errs = np.array([err for _, err in table])
        rates = np.log2(errs[:-1] / errs[1:])
        assert (rates >= 1.0).all()


class TestQuadrature:
    def test_weights_sum_to_one(self):
        pts, w = midpoint_quadrature(2, 3)
        assert pts.shape == (64, 2)
        assert w * pts.shape[0] == pytest.approx(1.0, rel=1e-15)

    def test_integrates_linear_exactly(self):
        pts, w = midpoint_quadrature(1, 5)
        approx = w * np.sum(2.0 * pts[:, 0] + 1.0)
        assert approx == pytest.approx(2.0, rel=1e-14)
