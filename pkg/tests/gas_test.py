import math

import numpy as np
import pytest

from krl import errors
from krl import gas
from krl.gas import FluidState
from testing.testifycompat import (
    assert_close,
    assert_equal,
    assert_raises_and_contains,
)


class TestClosure:

    def test_pressure_is_r_rho_theta(self):
        state = FluidState(0.8, 0.1, 1.3)
        assert_close(state.pressure, gas.GAS_CONSTANT * state.rho * state.theta)

    def test_sound_speed(self):
        state = FluidState(1.0, 0.0, 1.0)
        assert_close(state.sound_speed, math.sqrt(10.0) / 3.0)
        assert_close(state.characteristic_speed(1), -state.sound_speed)
        assert_equal(state.characteristic_speed(2), 0.0)
        assert_close(state.characteristic_speed(3), state.sound_speed)

    def test_entropy_constant_on_isentrope(self):
        vs = np.linspace(0.5, 2.0, 7)
        theta = gas.isentrope_temperature(vs, 1.0, 1.2)
        assert_close(gas.entropy(vs, theta), np.full(7, gas.entropy(1.0, 1.2)))

    def test_arrays_broadcast(self):
        p = gas.pressure(np.array([1.0, 2.0]), np.array([1.5, 1.5]))
        assert_close(p, [1.0, 0.5])


class TestFluidState:

    def test_reflected(self):
        state = FluidState(1.0, 0.3, 1.1)
        assert_equal(state.reflected(), FluidState(1.0, -0.3, 1.1))

    def test_distance(self):
        other = FluidState(1.1, 0.0, 0.7)
        assert_close(FluidState(1.0, 0.0, 1.0).distance(other), 0.3)

    @pytest.mark.parametrize('state', [
        FluidState(0.0, 0.0, 1.0),
        FluidState(1.0, 0.0, -1.0),
    ])
    def test_check_rejects_inadmissible(self, state):
        assert_raises_and_contains(errors.StateError, 'Inadmissible', state.check)

    def test_check_rejects_nan(self):
        assert_raises_and_contains(
            errors.StateError, 'Non-finite', FluidState(1.0, math.nan, 1.0).check)

    def test_check_states(self):
        states = gas.check_states(FluidState(1.0, 0.0, 1.0),
                                  FluidState(2.0, 0.0, 1.0))
        assert_equal(len(states), 2)
