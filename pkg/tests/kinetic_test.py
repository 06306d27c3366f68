import glob
import os

import numpy as np
import pytest

from krl import errors
from krl import grids
from krl import kinetic
from krl import macromicro
from krl import modulation
from krl.gas import FluidState
from krl.riemann import construct_pattern
from testing.testifycompat import (
    assert_close,
    assert_equal,
    assert_less_equal,
    assert_raises,
    assert_raises_and_contains,
)


PLUS = FluidState(1.0, 0.0, 1.0)


def micro_norm(field):
    """``||f - M[U_f]||`` in ``L^2`` of space and velocity."""
    maxwellian = macromicro.discrete_maxwellian_field(field.fluid(), field.velocity)
    squared = ((field.values - maxwellian) ** 2) @ field.velocity.weights
    return float(np.sqrt(np.sum(squared) * field.space.dx))


def periodic_config(**kwargs):
    return kinetic.SolverConfig(boundary=kinetic.PERIODIC, **kwargs)


def periodic_field(n_cells=16, n_velocity=10):
    space = grids.SpatialGrid(0.0, 1.0, n_cells)
    velocity = grids.build_velocity_grid((0.0, 0.0, 0.0), 6.0, n_velocity)
    wave = np.sin(2 * np.pi * space.centers)
    fluid = grids.FluidField(1.0 + 0.05 * wave,
                             np.column_stack([0.05 * wave, 0 * wave, 0 * wave]),
                             1.0 + 0.05 * np.cos(2 * np.pi * space.centers))
    values = macromicro.discrete_maxwellian_field(fluid, velocity)
    return grids.DistributionField(values, space, velocity)


class TestSolverConfig:

    @pytest.mark.parametrize('kwargs,text', [
        (dict(kappa=0.0), 'kappa'),
        (dict(kappa=0.1, cfl=1.5), 'CFL'),
        (dict(kappa=0.1, boundary='open'), 'boundary'),
        (dict(kappa=0.1, stride=0), 'stride'),
        (dict(kappa=0.1, collision_scale=0.0), 'Collision scale'),
    ])
    def test_invalid(self, kwargs, text):
        assert_raises_and_contains(
            errors.ConfigurationError, text, kinetic.SolverConfig(**kwargs).check)

    def test_fixed_boundary_needs_states(self):
        velocity = grids.build_velocity_grid((0, 0, 0), 6.0, 4)
        with pytest.raises(errors.ConfigurationError):
            kinetic.Boundary(kinetic.FIXED, velocity)


class TestInterfaceVelocity:

    def test_zero_mass_flux(self):
        velocity = grids.build_velocity_grid((0.0, 0.0, 0.0), 6.0, 8)
        rng = np.random.RandomState(0)
        left = rng.uniform(0.1, 1.0, size=(5, velocity.size))
        right = rng.uniform(0.1, 1.0, size=(5, velocity.size))
        u_star = kinetic.interface_velocity(left, right, velocity)
        flux, _ = kinetic.upwind_flux(left, right, u_star, velocity)
        assert_less_equal(np.abs(flux @ velocity.weights), 1e-10)

    def test_symmetric_maxwellian(self):
        velocity = grids.build_velocity_grid((0.0, 0.0, 0.0), 6.0, 8)
        m = macromicro.discrete_maxwellian(PLUS, velocity)[None]
        u_star = kinetic.interface_velocity(m, m, velocity)
        assert_close(u_star, [0.0], atol=1e-12)


class TestRun:

    def test_periodic_conservation(self):
        field = periodic_field()
        config = periodic_config(kappa=0.1, end_time=0.05)
        trajectory = kinetic.run(field, config)
        assert trajectory.steps > 1
        assert_close(trajectory.final.time, 0.05)
        assert_less_equal(np.abs(trajectory.ledger.drift()), 1e-10)

    def test_entropy_decreases(self):
        field = periodic_field()
        config = periodic_config(kappa=0.05, end_time=0.05)
        trajectory = kinetic.run(field, config)
        ledger = trajectory.ledger
        assert_equal(len(ledger.entropy), trajectory.steps + 1)
        slack = 1e-12 * abs(ledger.entropy[0])
        assert_less_equal(np.diff(ledger.entropy), 0.0, slack=slack)
        assert ledger.entropy[-1] < ledger.entropy[0]

    def test_volume_stays_moment(self):
        field = periodic_field()
        config = periodic_config(kappa=0.1, end_time=0.02)
        final = kinetic.run(field, config).final
        fluid = final.fluid()
        assert np.all(fluid.v > 0)
        assert np.all(fluid.theta > 0)

    def test_constant_state_is_stationary(self):
        space = grids.SpatialGrid(-1.0, 1.0, 12)
        velocity = grids.build_velocity_grid((0.0, 0.0, 0.0), 6.0, 10)
        m = macromicro.discrete_maxwellian(PLUS, velocity)
        field = grids.DistributionField(np.tile(m, (12, 1)), space, velocity)
        config = kinetic.SolverConfig(kappa=0.1, end_time=0.05)
        final = kinetic.run(field, config, boundary=(PLUS, PLUS)).final
        assert_close(final.values, field.values, rtol=1e-10, atol=1e-14)

    def test_relaxation_strengthens_with_kappa(self):
        field = periodic_field()
        norms = []
        for kappa in (0.02, 0.01):
            config = periodic_config(kappa=kappa, end_time=0.05)
            norms.append(micro_norm(kinetic.run(field, config).final))
        assert 0 < norms[1] < norms[0]
        assert_less_equal(norms[1] / norms[0], 0.75)

    def test_deterministic(self):
        field = periodic_field()
        config = periodic_config(kappa=0.05, end_time=0.03)
        first = kinetic.run(field, config).final
        second = kinetic.run(field, config).final
        np.testing.assert_array_equal(first.values, second.values)
        assert_equal(first.time, second.time)

    def test_resume_from_snapshot(self, tmp_path):
        field = periodic_field()
        config = periodic_config(kappa=0.05, end_time=0.03, stride=2,
                                 snapshot_dir=str(tmp_path / 'snapshots'))
        trajectory = kinetic.run(field, config)
        assert len(trajectory.snapshots) > 2
        middle = grids.read_snapshot(trajectory.snapshots[1], field.space,
                                     field.velocity)
        assert 0 < middle.time < 0.03
        resumed = kinetic.run(middle, periodic_config(kappa=0.05, end_time=0.03))
        np.testing.assert_array_equal(resumed.final.values, trajectory.final.values)
        assert_equal(resumed.final.time, trajectory.final.time)
        assert_equal(resumed.steps + 4, trajectory.steps)

    def test_cfl_violation(self):
        field = periodic_field()
        config = periodic_config(kappa=0.1, end_time=0.05, dt=1.0, dump_dir=None)
        error = assert_raises(errors.SolverError, kinetic.step, field, config)
        assert 'CFL violation' in str(error)
        assert os.path.exists(error.dump_path)
        os.remove(error.dump_path)

    def test_step_limit(self, tmp_path):
        field = periodic_field()
        config = periodic_config(kappa=0.1, end_time=1.0, max_steps=2,
                                 dump_dir=str(tmp_path))
        assert_raises_and_contains(
            errors.SolverError, 'Step limit', kinetic.run, field, config)
        assert_equal(len(glob.glob(str(tmp_path / 'krl-dump-*.bin'))), 1)

    def test_observers_and_snapshots(self, tmp_path):
        seen = []

        class Every:
            stride = 1

            def __call__(self, info):
                seen.append(info.step)
                assert not info.field.values.flags.writeable

        field = periodic_field()
        config = periodic_config(kappa=0.1, end_time=0.02, stride=3,
                                 snapshot_dir=str(tmp_path / 'snapshots'))
        trajectory = kinetic.run(field, config, observers=[Every()])
        assert_equal(seen, list(range(1, trajectory.steps + 1)))
        written = os.listdir(tmp_path / 'snapshots')
        assert_equal(len(trajectory.snapshots), len(written))
        restored = grids.read_snapshot(trajectory.snapshots[-1], field.space,
                                       field.velocity)
        assert_close(restored.time, 0.02)

    def test_observer_failure(self):
        def broken(info):
            raise ValueError("boom")

        field = periodic_field()
        config = periodic_config(kappa=0.1, end_time=0.02, stride=1)
        assert_raises_and_contains(
            errors.ObserverError, ['broken', 'boom'], kinetic.run, field, config,
            observers=[broken])

    def test_wave_reaching_boundary(self, tmp_path):
        pattern = construct_pattern(PLUS, 0.0, 0.0, 0.1)
        space = grids.SpatialGrid(-0.05, 0.05, 10)
        velocity = grids.default_velocity_grid(pattern.states, 10)
        values = kinetic.maxwellian_of_fields(kinetic.riemann_fields(pattern, space),
                                              velocity)
        field = grids.DistributionField(values, space, velocity)
        config = kinetic.SolverConfig(kappa=0.01, end_time=1.0, boundary_cells=2,
                                      dump_dir=str(tmp_path))
        assert_raises_and_contains(
            errors.SolverError, 'reached the boundary', kinetic.run, field, config,
            boundary=(pattern.minus, pattern.plus))


class TestInitialData:

    @pytest.fixture(autouse=True)
    def setup_pattern(self):
        self.pattern = construct_pattern(PLUS, 0.0, 0.0, 0.05)
        self.space = grids.SpatialGrid(-1.0, 1.0, 40)
        self.velocity = grids.default_velocity_grid(self.pattern.states, 10)
        self.profiles = modulation.build_profiles(self.pattern, 0.05, n_nodes=2000)

    def test_sharp(self):
        data = kinetic.prepare_initial_data(self.pattern, self.profiles, self.space,
                                            self.velocity, kinetic.SHARP)
        fluid = data.field.fluid()
        assert_close(fluid.v[0], self.pattern.minus.v, rtol=1e-10)
        assert_close(fluid.v[-1], self.pattern.plus.v, rtol=1e-10)
        assert_equal(data.functional.deviation, 0.0)

    def test_well_prepared(self):
        data = kinetic.prepare_initial_data(self.pattern, self.profiles, self.space,
                                            self.velocity, kinetic.WELL_PREPARED)
        assert np.all(data.field.values >= 0)
        functional = data.functional
        assert 0 < functional.deviation < np.inf
        assert_close(functional.normalized, functional.macroscopic / 0.05)

    def test_well_prepared_scales_with_kappa(self):
        pattern = construct_pattern(PLUS, 0.0, 0.0, 0.1)
        space = grids.SpatialGrid(-2.0, 2.0, 400)
        velocity = grids.default_velocity_grid(pattern.states, 10)
        values = []
        for kappa in (0.02, 0.01):
            profiles = modulation.build_profiles(pattern, kappa, n_nodes=2000)
            data = kinetic.prepare_initial_data(pattern, profiles, space, velocity)
            values.append(data.functional.macroscopic)
        ratio = values[0] / values[1]
        assert 1.0 <= ratio <= 4.0

    def test_unknown_mode(self):
        assert_raises_and_contains(
            errors.ConfigurationError, 'Unknown initial data mode',
            kinetic.prepare_initial_data, self.pattern, self.profiles, self.space,
            self.velocity, 'smooth')

    def test_micro_indicator(self):
        data = kinetic.prepare_initial_data(self.pattern, self.profiles, self.space,
                                            self.velocity, kinetic.WELL_PREPARED)
        assert kinetic.micro_indicator(data.field, 0.05) >= 0


@pytest.mark.acceptance
class TestDeskScaleAcceptance:

    def test_conservation_and_entropy(self):
        field = periodic_field(n_cells=400, n_velocity=16)
        config = periodic_config(kappa=0.01, end_time=0.01, dt=1e-4)
        trajectory = kinetic.run(field, config)
        ledger = trajectory.ledger
        assert_equal(trajectory.steps, 100)
        assert_less_equal(np.abs(ledger.drift()), 1e-10)
        slack = 1e-12 * abs(ledger.entropy[0])
        assert_less_equal(np.diff(ledger.entropy), 0.0, slack=slack)

    def test_sharp_initial_layer(self):
        kappa = 0.02
        pattern = construct_pattern(PLUS, 0.0, 0.0, 0.1)
        space = grids.SpatialGrid(-0.6, 0.6, 480)
        velocity = grids.default_velocity_grid(pattern.states, 10)
        profiles = modulation.build_profiles(pattern, kappa, n_nodes=2000)
        data = kinetic.prepare_initial_data(pattern, profiles, space, velocity,
                                            kinetic.SHARP)
        slowest = min(macromicro.collision_frequency(s.rho, s.theta, kappa)
                      for s in pattern.states)
        config = kinetic.SolverConfig(kappa=kappa, end_time=10.0 / slowest,
                                      boundary_tolerance=None)
        final = kinetic.run(data.field, config, (pattern.minus, pattern.plus)).final
        before = kinetic.micro_indicator(data.field, kappa)
        after = kinetic.micro_indicator(final, kappa)
        assert before > 0
        assert_less_equal(after, before / 5.0)
