import math

import numpy as np
import pytest

from krl import errors
from krl import riemann
from krl.gas import FluidState
from krl.riemann import RAREFACTION
from krl.riemann import SHOCK
from testing.testifycompat import (
    assert_close,
    assert_equal,
    assert_less_equal,
    assert_raises_and_contains,
)


PLUS = FluidState(1.0, 0.0, 1.0)


class TestWaveCurves:

    @pytest.mark.parametrize('family', [1, 3])
    def test_hugoniot_jump_conditions(self, family):
        state, speed = riemann.hugoniot_state(PLUS, 0.9, family)
        assert_less_equal(np.abs(riemann.jump_residuals(PLUS, state, speed)), 1e-13)

    def test_hugoniot_rejects_expansion(self):
        assert_raises_and_contains(
            errors.RiemannError, 'compressive side', riemann.hugoniot_state,
            PLUS, 1.1, 3)

    def test_rarefaction_is_isentropic(self):
        state = riemann.rarefaction_state(PLUS, 1.2)
        assert_close(state.entropy, PLUS.entropy)
        assert_less_equal(riemann.characteristic_residual(PLUS, state), 1e-6)

    def test_rarefaction_rejects_compression(self):
        with pytest.raises(errors.RiemannError):
            riemann.rarefaction_state(PLUS, 0.8)

    def test_invalid_family(self):
        assert_raises_and_contains(
            errors.RiemannError, 'family', riemann.hugoniot_state, PLUS, 0.9, 2)


class TestConstructPattern:

    def test_single_shock(self):
        pattern = riemann.construct_pattern(PLUS, 0.0, 0.0, 0.05)
        assert_equal(pattern.kind, 'single3')
        assert_equal(pattern.shock_families(), [3])
        assert_close(pattern.delta3, 0.05)
        assert pattern.sigma3 > 0
        left, right = pattern.shock_sides(3)
        assert riemann.satisfies_lax(left, right, pattern.sigma3, 3)

    def test_shock_contact_shock(self):
        pattern = riemann.construct_pattern(PLUS, 0.04, 0.03, 0.05)
        assert_equal(pattern.kind, 'scs')
        assert_equal(pattern.shock_families(), [1, 3])
        assert_close(pattern.strength, 0.12)
        assert_close(pattern.star_left.pressure, pattern.star_right.pressure)
        assert_close(pattern.star_left.u1, pattern.star_right.u1)
        assert_close(pattern.star_right.theta - pattern.star_left.theta, 0.03)
        for family in (1, 3):
            left, right = pattern.shock_sides(family)
            speed = pattern.shock_speed(family)
            assert riemann.satisfies_lax(left, right, speed, family)
            residuals = riemann.jump_residuals(left, right, speed)
            assert_less_equal(np.abs(residuals), 1e-13)

    def test_rarefaction_contact_shock(self):
        pattern = riemann.construct_pattern(PLUS, 0.04, 0.03, 0.05,
                                            first_wave=RAREFACTION)
        assert_equal(pattern.kind, 'rcs')
        assert_equal(pattern.shock_families(), [3])
        assert math.isnan(pattern.sigma1)
        lo, hi = pattern.fan()
        assert lo < hi < 0
        assert_close(pattern.minus.entropy, pattern.star_left.entropy)

    def test_negative_contact_sign(self):
        pattern = riemann.construct_pattern(PLUS, 0.0, 0.03, 0.05, contact_sign=-1.0)
        assert_close(pattern.star_left.theta - pattern.star_right.theta, 0.03)

    def test_rejects_negative_strength(self):
        assert_raises_and_contains(
            errors.RiemannError, 'non-negative',
            riemann.construct_pattern, PLUS, -0.1, 0.0, 0.05)

    def test_state_at(self):
        pattern = riemann.construct_pattern(PLUS, 0.04, 0.03, 0.05)
        assert_equal(pattern.state_at(-10.0), pattern.minus)
        assert_equal(pattern.state_at(-1e-9), pattern.star_left)
        assert_equal(pattern.state_at(1e-9), pattern.star_right)
        assert_equal(pattern.state_at(10.0), pattern.plus)


class TestSolveRiemann:

    def test_equal_states(self):
        pattern = riemann.solve_riemann(PLUS, PLUS)
        assert_less_equal(pattern.strength, 1e-12)
        assert_close(pattern.star_left.as_array(), PLUS.as_array(), atol=1e-12)

    @pytest.mark.parametrize('first_wave', [SHOCK, RAREFACTION])
    def test_recovers_constructed_strengths(self, first_wave):
        built = riemann.construct_pattern(PLUS, 0.04, 0.03, 0.05,
                                          first_wave=first_wave)
        solved = riemann.solve_riemann(built.minus, built.plus)
        assert_equal((solved.wave1, solved.wave3), (first_wave, SHOCK))
        assert_close([solved.delta1, solved.delta_c, solved.delta3],
                     [0.04, 0.03, 0.05], rtol=1e-8)
        assert_close(solved.star_left.as_array(), built.star_left.as_array(),
                     rtol=1e-9)

    def test_galilean_invariance(self):
        built = riemann.construct_pattern(PLUS, 0.04, 0.03, 0.05)
        shift = 0.7
        minus = built.minus._replace(u1=built.minus.u1 + shift)
        plus = built.plus._replace(u1=built.plus.u1 + shift)
        solved = riemann.solve_riemann(minus, plus)
        assert_close(solved.star_left.u1, built.star_left.u1 + shift, rtol=1e-9)
        assert_close(solved.sigma3, built.sigma3, rtol=1e-9)

    def test_vacuum(self):
        assert_raises_and_contains(
            errors.RiemannError, 'vacuum', riemann.solve_riemann,
            FluidState(1.0, -10.0, 1.0), FluidState(1.0, 10.0, 1.0))

    def test_rejects_inadmissible_state(self):
        with pytest.raises(errors.StateError):
            riemann.solve_riemann(FluidState(-1.0, 0.0, 1.0), PLUS)


class TestFormatReport:

    def test_keys(self):
        pattern = riemann.construct_pattern(PLUS, 0.0, 0.0, 0.05)
        report = riemann.format_report(pattern)
        lines = dict(line.split(' = ') for line in report.splitlines())
        assert_equal(lines['pattern'], 'single3')
        assert_equal(float(lines['delta3']), 0.05)
        assert_equal(float(lines['plus.p']), PLUS.pressure)
        assert report.endswith('\n')
