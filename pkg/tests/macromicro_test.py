import numpy as np
import pytest

from krl import errors
from krl import grids
from krl import macromicro
from krl.gas import FluidState
from krl.profiles import Transport
from krl.profiles import WaveFields
from testing.testifycompat import (
    assert_close,
    assert_less_equal,
    assert_raises_and_contains,
)


STATE = FluidState(0.9, 0.2, 1.1)


@pytest.fixture(scope='module')
def grid():
    return grids.build_velocity_grid((0.0, 0.0, 0.0), 8.0, 24)


@pytest.fixture(scope='module')
def maxwellian(grid):
    return macromicro.discrete_maxwellian(STATE, grid)


class TestDiscreteMaxwellian:

    def test_moments_exact(self, grid, maxwellian):
        rho, momentum, energy = grids.moments(maxwellian, grid)
        assert_close(rho, STATE.rho, rtol=1e-12)
        assert_close(momentum, STATE.rho * STATE.velocity, rtol=1e-12, atol=1e-14)
        expected = STATE.rho * (STATE.theta + 0.5 * STATE.u1 ** 2)
        assert_close(energy, expected, rtol=1e-12)

    def test_close_to_continuum(self, grid, maxwellian):
        continuum = macromicro.gaussian(STATE.rho, STATE.velocity, STATE.theta,
                                        grid)[0]
        assert_less_equal(np.max(np.abs(maxwellian - continuum)), 1e-8)

    def test_entropy_close_to_closed_form(self, grid, maxwellian):
        assert_close(macromicro.discrete_entropy(maxwellian, grid),
                     macromicro.gaussian_entropy(STATE), rtol=1e-8)

    def test_too_narrow_grid(self):
        narrow = grids.build_velocity_grid((0.0, 0.0, 0.0), 0.5, 4)
        assert_raises_and_contains(
            errors.ConvergenceError, 'larger radius',
            macromicro.discrete_maxwellian, FluidState(1.0, 0.0, 4.0), narrow)


class TestProjections:

    def test_basis_orthonormal(self, grid):
        chi = macromicro.orthonormal_basis(STATE, grid)
        m = macromicro.gaussian(STATE.rho, STATE.velocity, STATE.theta, grid)[0]
        gram = (chi / m) @ (chi * grid.weights).T
        assert_close(gram, np.eye(5), atol=1e-8)

    def test_maxwellian_has_no_micro_part(self, grid, maxwellian):
        micro = macromicro.micro_projection(maxwellian, maxwellian, grid)
        assert_less_equal(np.max(np.abs(micro)), 1e-12 * np.max(maxwellian))

    def test_projection_idempotent(self, grid, maxwellian):
        rng = np.random.RandomState(3)
        g = maxwellian * (1.0 + 0.1 * rng.standard_normal(grid.size))
        once = macromicro.macro_projection(g, maxwellian, grid)
        twice = macromicro.macro_projection(once, maxwellian, grid)
        assert_close(twice, once, rtol=1e-9, atol=1e-14)

    def test_micro_part_has_no_moments(self, grid, maxwellian):
        rng = np.random.RandomState(4)
        g = maxwellian * (1.0 + 0.1 * rng.standard_normal(grid.size))
        micro = macromicro.micro_projection(g, maxwellian, grid)
        found = (micro * grid.weights) @ macromicro.collision_invariants(grid)
        assert_less_equal(np.abs(found), 1e-12)

    def test_project_micro_checks_moments(self, grid, maxwellian):
        assert_raises_and_contains(
            errors.StateError, 'does not match the moments',
            macromicro.project_micro, maxwellian, STATE._replace(theta=2.0), grid)

    def test_project_micro_of_maxwellian(self, grid, maxwellian):
        micro = macromicro.project_micro(maxwellian, STATE, grid, maxwellian)
        assert_less_equal(np.max(np.abs(micro)), 1e-12)


class TestChapmanEnskog:

    @pytest.fixture(autouse=True)
    def setup_fields(self, grid):
        self.grid = grid
        self.state = FluidState(1.0, 0.0, 1.2)
        self.kappa = 0.05
        self.mu = Transport.for_bgk(self.kappa).mu(np.array([self.state.theta]))

    def fields(self, u1_x=0.0, theta_x=0.0):
        one = np.ones(1)
        state = self.state
        return WaveFields(state.v * one, state.u1 * one, state.theta * one,
                          0.0 * one, u1_x * one, theta_x * one)

    def test_viscous_stress(self):
        micro = macromicro.shock_micro_part(self.fields(u1_x=0.3), self.kappa,
                                            self.grid)
        split = macromicro.MicroSplit(0, micro, 0)
        assert_close(split.momentum_flux(self.grid), -4.0 / 3.0 * self.mu * 0.3,
                     rtol=1e-6)

    def test_heat_flux(self):
        micro = macromicro.shock_micro_part(self.fields(theta_x=0.2), self.kappa,
                                            self.grid)
        split = macromicro.MicroSplit(0, micro, 0)
        assert_close(split.heat_flux(self.grid), -5.0 / 3.0 * self.mu * 0.2,
                     rtol=1e-6)

    def test_split_remainder(self):
        fields = self.fields(u1_x=0.1)
        m = macromicro.wave_maxwellian(fields, self.grid)
        nu = macromicro.collision_frequency(np.ones(1), fields.theta, self.kappa)
        diffusion = macromicro.diffusion_part(m, fields, nu, self.grid)
        split = macromicro.chapman_enskog_split(2 * diffusion, m, fields, nu,
                                                self.grid)
        assert_close(split.remainder, diffusion)

    def test_rejects_non_positive_frequency(self):
        fields = self.fields(u1_x=0.1)
        m = macromicro.wave_maxwellian(fields, self.grid)
        with pytest.raises(errors.StateError):
            macromicro.diffusion_part(m, fields, np.zeros(1), self.grid)


class TestRelativeEntropy:

    def test_zero_at_reference(self):
        assert macromicro.relative_entropy(STATE, STATE) == 0.0

    def test_quadratic_expansion(self):
        near = FluidState(STATE.v + 1e-3, STATE.u1 - 2e-3, STATE.theta + 1e-3)
        assert_close(macromicro.relative_entropy(near, STATE),
                     macromicro.quadratic_entropy(near, STATE), rtol=1e-2)

    def test_equivalence_constants(self):
        rng = np.random.RandomState(5)
        references = np.tile(STATE.as_array(), (200, 1))
        samples = references * (1.0 + 0.1 * rng.uniform(-1, 1, size=(200, 3)))
        low, high = macromicro.equivalence_constants(samples, references)
        assert 0 < low <= high < np.inf

    def test_rejects_non_positive(self):
        with pytest.raises(errors.StateError):
            macromicro.relative_entropy_density(
                np.array([-1.0]), np.zeros(1), np.ones(1), 1.0, 0.0, 1.0)

    def test_entropy_potential(self):
        assert_close(macromicro.entropy_potential(np.array([1.0])), [0.0], atol=0)
        assert np.all(macromicro.entropy_potential(np.array([0.5, 2.0])) > 0)


class TestReferenceNorms:

    def test_nu_norm_dominates(self, grid, maxwellian):
        reference = macromicro.global_maxwellian(1.0, 1.5, grid)
        plain = macromicro.norm_sq(maxwellian, reference, grid)
        weighted = macromicro.nu_norm_sq(maxwellian, reference, grid)
        assert 0 < plain < weighted
