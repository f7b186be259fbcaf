"""Tests for the PDE field generators and bilinear upscaling."""

import numpy as np
import pytest

from multifid.datagen.pde import (
    FieldGrid,
    solve_burgers,
    solve_laplace_dirichlet,
    solve_poisson,
    upscale_bilinear,
)
from multifid.errors import ConfigError, DomainError


class TestBurgers:
    def test_zero_initial_profile_stays_zero(self):
        grid = solve_burgers(0.05, 16, 16, initial=np.zeros(16))
        np.testing.assert_array_equal(grid.values, np.zeros((16, 16)))

    def test_discrete_maximum_principle(self):
        for nu in (0.001, 0.01, 0.1):
            grid = solve_burgers(nu, 24, 24)
            initial_max = grid.values[:, 0].max()
            assert grid.values.max() <= initial_max + 1e-10
            assert grid.values.min() >= -1e-10

    def test_self_convergence_monotone(self):
        reference = upscale_bilinear(solve_burgers(0.05, 256, 256), 100, 100).values
        errors = []
        for n in (16, 32, 64):
            coarse = upscale_bilinear(solve_burgers(0.05, n, n), 100, 100).values
            errors.append(float(np.sqrt(np.mean((coarse - reference) ** 2))))
        assert errors[0] > errors[1] > errors[2]

    def test_initial_column_is_the_profile(self):
        grid = solve_burgers(0.01, 16, 16)
        x = np.linspace(0, 1, 16)
        expected = np.sin(x * np.pi / 2)
        expected[0] = expected[-1] = 0.0
        np.testing.assert_allclose(grid.values[:, 0], expected, atol=1e-15)

    def test_viscosity_domain_enforced(self):
        with pytest.raises(DomainError):
            solve_burgers(0.5, 16, 16)

    def test_mesh_floor_enforced(self):
        with pytest.raises(ConfigError):
            solve_burgers(0.05, 4, 16)

    def test_deterministic(self):
        a = solve_burgers(0.02, 16, 16).values
        b = solve_burgers(0.02, 16, 16).values
        np.testing.assert_array_equal(a, b)


class TestPoisson:
    def test_constant_boundary_gives_constant_field(self):
        grid = solve_poisson([0.4, 0.4, 0.4, 0.4], 0.4, 16)
        np.testing.assert_allclose(grid.values, 0.4, atol=1e-10)

    def test_linear_field_reproduced_exactly(self):
        # the five-point stencil is exact on linear functions; no centre pin
        n = 16
        ramp = 0.1 + 0.8 * np.linspace(0, 1, n)
        grid = solve_laplace_dirichlet(top=ramp, bottom=ramp, left=0.1, right=0.9,
                                       n=n, center=None)
        expected = np.tile(ramp, (n, 1))
        np.testing.assert_allclose(grid.values, expected, atol=1e-8)

    def test_discrete_maximum_principle(self):
        borders = [0.15, 0.85, 0.3, 0.6]
        center = 0.75
        grid = solve_poisson(borders, center, 16)
        lo, hi = min(borders + [center]), max(borders + [center])
        assert grid.values.min() >= lo - 1e-10
        assert grid.values.max() <= hi + 1e-10

    def test_center_node_pinned(self):
        grid = solve_poisson([0.1, 0.1, 0.1, 0.1], 0.9, 17)
        assert grid.values[8, 8] == 0.9

    def test_value_range_enforced(self):
        with pytest.raises(DomainError):
            solve_poisson([0.1, 0.1, 0.1, 0.1], 0.95, 8)

    def test_grid_floor_enforced(self):
        with pytest.raises(ConfigError):
            solve_poisson([0.5] * 4, 0.5, 4)


class TestUpscaleBilinear:
    def test_constant_field(self):
        grid = FieldGrid(np.full((4, 4), 2.5))
        up = upscale_bilinear(grid, 11, 7)
        np.testing.assert_array_equal(up.values, np.full((11, 7), 2.5))

    def test_reproduces_bilinear_function_exactly(self):
        a, b, c, d = 0.3, 1.7, -0.9, 0.4
        def f(r, cgrid):
            return a + b * r + c * cgrid + d * r * cgrid
        src_r = np.linspace(0, 1, 5)[:, None]
        src_c = np.linspace(0, 1, 9)[None, :]
        grid = FieldGrid(f(src_r, src_c))
        up = upscale_bilinear(grid, 13, 17)
        tgt_r = np.linspace(0, 1, 13)[:, None]
        tgt_c = np.linspace(0, 1, 17)[None, :]
        np.testing.assert_allclose(up.values, f(tgt_r, tgt_c), atol=1e-12)

    def test_corners_preserved_bit_exactly(self):
        rng = np.random.default_rng(0)
        grid = FieldGrid(rng.random((6, 8)))
        up = upscale_bilinear(grid, 100, 100)
        assert up.values[0, 0] == grid.values[0, 0]
        assert up.values[0, -1] == grid.values[0, -1]
        assert up.values[-1, 0] == grid.values[-1, 0]
        assert up.values[-1, -1] == grid.values[-1, -1]

    def test_degenerate_target_rejected(self):
        with pytest.raises(ConfigError):
            upscale_bilinear(FieldGrid(np.ones((4, 4))), 1, 5)


class TestFieldGrid:
    def test_rejects_tiny_fields(self):
        with pytest.raises(ConfigError):
            FieldGrid(np.ones((1, 5)))

    def test_rejects_non_finite(self):
        from multifid.errors import NumericError
        values = np.ones((4, 4))
        values[2, 2] = np.nan
        with pytest.raises(NumericError):
            FieldGrid(values)
