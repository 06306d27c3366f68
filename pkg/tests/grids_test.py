import numpy as np
import pytest
from scipy import special

from krl import errors
from krl import grids
from krl.gas import FluidState
from krl.macromicro import discrete_maxwellian_field
from testing.testifycompat import (
    assert_close,
    assert_equal,
    assert_raises_and_contains,
)


def gaussian_mass(grid):
    density = np.exp(-0.5 * np.sum(grid.nodes ** 2, axis=1)) / (2 * np.pi) ** 1.5
    return float(np.sum(grid.weights * density))


class TestSpatialGrid:

    def test_centers(self):
        space = grids.SpatialGrid(-1.0, 1.0, 4)
        assert_close(space.dx, 0.5)
        assert_close(space.centers, [-0.75, -0.25, 0.25, 0.75])

    def test_integrate_linear(self):
        space = grids.SpatialGrid(0.0, 2.0, 10)
        assert_close(space.integrate(space.centers), 2.0)

    @pytest.mark.parametrize('args', [(1.0, 1.0, 10), (0.0, 1.0, 0)])
    def test_invalid(self, args):
        with pytest.raises(errors.GridError):
            grids.SpatialGrid(*args)

    def test_refinement(self):
        exact = np.sqrt(np.pi / 2.0) * special.erf(1.0 / np.sqrt(2.0))

        def error(n_cells):
            space = grids.SpatialGrid(0.0, 1.0, n_cells)
            return abs(space.integrate(np.exp(-space.centers ** 2 / 2.0)) - exact)

        assert error(10) >= 3.0 * error(20)

    def test_equality(self):
        assert grids.SpatialGrid(0, 1, 3) == grids.SpatialGrid(0.0, 1.0, 3)
        assert grids.SpatialGrid(0, 1, 3) != grids.SpatialGrid(0, 1, 4)


class TestVelocityGrid:

    @pytest.fixture(autouse=True)
    def setup_grid(self):
        self.grid = grids.build_velocity_grid((0.5, 0.0, 0.0), 4.0, 6)

    def test_shapes(self):
        assert_equal(self.grid.size, 216)
        assert_equal(self.grid.nodes.shape, (216, 3))
        assert_close(self.grid.weights.sum(), self.grid.box_volume)

    def test_mirror_index(self):
        mirrored = self.grid.nodes[self.grid.mirror_index()]
        assert_close(mirrored, 2 * self.grid.center - self.grid.nodes, atol=1e-12)

    def test_gaussian_quadrature(self):
        grid = grids.build_velocity_grid((0.0, 0.0, 0.0), 8.0, 32)
        assert_close(gaussian_mass(grid), 1.0, atol=1e-6)

    def test_refinement(self):
        coarse, fine = (grids.build_velocity_grid((0, 0, 0), 8.0, n) for n in (4, 8))
        errors_by_grid = [abs(gaussian_mass(grid) - 1.0) for grid in (coarse, fine)]
        assert errors_by_grid[0] >= 3.0 * errors_by_grid[1]

    @pytest.mark.parametrize('radius,n', [(0.0, 8), (4.0, 5), (4.0, 2)])
    def test_rejects_invalid(self, radius, n):
        with pytest.raises(errors.GridError):
            grids.build_velocity_grid((0, 0, 0), radius, n)

    def test_default_grid_covers_states(self):
        states = [FluidState(1.0, -0.4, 1.0), FluidState(1.0, 0.2, 2.25)]
        grid = grids.default_velocity_grid(states, 8)
        assert_close(grid.center, [-0.1, 0.0, 0.0])
        assert_close(grid.radius, 6.0 * 1.5 + 0.3)


class TestFields:

    @pytest.fixture(autouse=True)
    def setup_field(self):
        self.space = grids.SpatialGrid(0.0, 1.0, 3)
        self.velocity = grids.build_velocity_grid((0, 0, 0), 8.0, 12)
        fluid = grids.FluidField([1.0, 0.8, 1.2], np.zeros((3, 3)), [1.0, 1.1, 0.9])
        self.fluid = fluid
        values = discrete_maxwellian_field(fluid, self.velocity)
        self.field = grids.DistributionField(values, self.space, self.velocity)

    def test_fluid_recovers_state(self):
        fluid = self.field.fluid()
        assert_close(fluid.v, self.fluid.v, rtol=1e-10)
        assert_close(fluid.theta, self.fluid.theta, rtol=1e-10)
        assert_close(fluid.u, 0.0, atol=1e-10)

    def test_constant_field(self):
        fluid = grids.FluidField.constant(FluidState(2.0, 0.5, 1.0), 4)
        assert_close(fluid.u1, 0.5)
        assert_close(fluid.rho, 0.5)
        assert_equal(fluid.state(1), FluidState(2.0, 0.5, 1.0))

    def test_rejects_negative_temperature(self):
        with pytest.raises(errors.StateError):
            grids.FluidField([1.0], [[0, 0, 0]], [-1.0])

    def test_shape_mismatch(self):
        assert_raises_and_contains(
            errors.GridError, 'Expected values of shape',
            grids.DistributionField, np.zeros((2, 5)), self.space, self.velocity)

    def test_snapshot_roundtrip(self, tmp_path):
        path = str(tmp_path / 'f.bin')
        grids.write_snapshot(path, self.field.replace(self.field.values, 0.25))
        restored = grids.read_snapshot(path, self.space, self.velocity)
        assert_equal(restored.time, 0.25)
        np.testing.assert_array_equal(restored.values, self.field.values)

    def test_snapshot_wrong_grid(self, tmp_path):
        path = str(tmp_path / 'f.bin')
        grids.write_snapshot(path, self.field)
        assert_raises_and_contains(
            errors.GridError, 'grids expect', grids.read_snapshot, path,
            grids.SpatialGrid(0.0, 1.0, 4), self.velocity)

    def test_snapshot_bad_magic(self, tmp_path):
        path = tmp_path / 'f.bin'
        path.write_bytes(b'x' * 64)
        assert_raises_and_contains(
            errors.GridError, 'not a snapshot', grids.read_snapshot, str(path),
            self.space, self.velocity)
