"""
Exact Riemann solver for the Lagrangian Euler equations of a monatomic gas.

.. math::

    v_t - u_{1x} = 0,\\quad u_{1t} + p_x = 0,\\quad
    (\\theta + |u|^2/2)_t + (p u_1)_x = 0

Wave curves are parametrised either by the specific volume (the public
:func:`hugoniot_state` and :func:`rarefaction_state`) or by the pressure
(inside :func:`solve_riemann`). Across a shock the Hugoniot locus of the
closure ``e = theta``, ``p = 2 theta/(3v)`` is explicit,

.. math::

    p = p_0 \\frac{4 v_0 - v}{4 v - v_0},

and across a rarefaction the state follows the isentrope ``p v^{5/3}``
with the velocity given by the Riemann invariant in closed form.

The base state of a wave curve is always the state ahead of the wave: the
left state for the 1-family and the right state for the 3-family. A shock
compresses, so its target volume is below the base volume.
"""
import logging
import math
from dataclasses import dataclass
from typing import List
from typing import Optional
from typing import Tuple

import numpy as np
from scipy import optimize

from krl import errors
from krl.gas import FluidState


log = logging.getLogger(__name__)

SHOCK = 'shock'
RAREFACTION = 'rarefaction'


def _family_sign(family: int) -> float:
    if family not in (1, 3):
        raise errors.RiemannError(f"Wave family must be 1 or 3, got {family}")
    return -1.0 if family == 1 else 1.0


def _hugoniot_point(
    base: FluidState,
    v: float,
    family: int,
) -> Tuple[FluidState, float]:
    """State on the Hugoniot locus of ``base`` at volume ``v`` with its
    speed. The relation is symmetric, so ``base`` may be either side.
    """
    p0 = base.pressure
    if not 4.0 * v > base.v:
        raise errors.RiemannError(
            f"Volume {v} is beyond the Hugoniot limit {base.v / 4.0}")
    p = p0 * (4.0 * base.v - v) / (4.0 * v - base.v)
    if v == base.v:
        speed = _family_sign(family) * base.sound_speed
    else:
        speed = _family_sign(family) * math.sqrt(-(p - p0) / (v - base.v))
    u1 = base.u1 - speed * (v - base.v)
    return FluidState(v, u1, 1.5 * p * v), speed


def _isentrope_point(base: FluidState, v: float, family: int) -> FluidState:
    """State on the ``family`` rarefaction curve through ``base``."""
    a = base.pressure * base.v ** (5.0 / 3.0)
    amplitude = 3.0 * math.sqrt(5.0 * a / 3.0)
    du = amplitude * (base.v ** (-1.0 / 3.0) - v ** (-1.0 / 3.0))
    u1 = base.u1 + du if family == 1 else base.u1 - du
    theta = base.theta * (base.v / v) ** (2.0 / 3.0)
    return FluidState(v, u1, theta)


def hugoniot_state(
    base: FluidState,
    v_target: float,
    family: int,
) -> Tuple[FluidState, float]:
    """The state behind an admissible ``family`` shock whose state ahead is
    ``base``, and the shock speed.

    :raises RiemannError: if ``v_target`` is on the rarefaction side
    """
    base.check()
    _family_sign(family)
    if not 0 < v_target <= base.v:
        raise errors.RiemannError(
            f"v_target={v_target} is not on the compressive side of v={base.v}; "
            f"use rarefaction_state")
    return _hugoniot_point(base, v_target, family)


def rarefaction_state(
    base: FluidState,
    v_target: float,
    family: int = 1,
) -> FluidState:
    """The state reached from ``base`` along the ``family`` rarefaction
    curve, at constant entropy.

    :raises RiemannError: if ``v_target`` is on the shock side
    """
    base.check()
    _family_sign(family)
    if not v_target >= base.v:
        raise errors.RiemannError(
            f"v_target={v_target} is on the shock side of v={base.v}; "
            f"use hugoniot_state")
    return _isentrope_point(base, v_target, family)


def characteristic_residual(
    base: FluidState,
    state: FluidState,
    n: int = 2001,
) -> float:
    """Residual of ``du1/dv = -lambda_1`` along the 1-rarefaction from
    ``base`` to ``state``, by central differences on ``n`` points.
    """
    vs = np.linspace(base.v, state.v, n)
    if vs[-1] == vs[0]:
        return 0.0
    u = np.array([_isentrope_point(base, v, 1).u1 for v in vs])
    theta = base.theta * (base.v / vs) ** (2.0 / 3.0)
    lam = -np.sqrt(10.0 * theta) / (3.0 * vs)
    du = np.gradient(u, vs, edge_order=2)
    return float(np.max(np.abs(du + lam)[1:-1]))


def jump_residuals(left: FluidState, right: FluidState, speed: float) -> np.ndarray:
    """Residuals of the three Rankine-Hugoniot conditions."""
    dv = right.v - left.v
    du = right.u1 - left.u1
    de = (right.theta + 0.5 * right.u1 ** 2) - (left.theta + 0.5 * left.u1 ** 2)
    dp = right.pressure - left.pressure
    dpu = right.pressure * right.u1 - left.pressure * left.u1
    return np.array([-speed * dv - du, -speed * du + dp, -speed * de + dpu])


def satisfies_lax(
    left: FluidState,
    right: FluidState,
    speed: float,
    family: int,
) -> bool:
    """``lambda_i(right) < speed < lambda_i(left)``."""
    return (right.characteristic_speed(family) < speed
            < left.characteristic_speed(family))


@dataclass(frozen=True)
class WavePattern:
    """Solution of a Riemann problem ``minus -> star_left -> star_right ->
    plus``. Shock speeds of rarefaction families are ``nan``.
    """
    minus: FluidState
    star_left: FluidState
    star_right: FluidState
    plus: FluidState
    wave1: str
    wave3: str
    delta1: float
    delta_c: float
    delta3: float
    sigma1: float
    sigma3: float

    @property
    def kind(self) -> str:
        if self.delta1 == 0 and self.delta_c == 0 and self.wave3 == SHOCK:
            return 'single3'
        if self.wave3 != SHOCK:
            return 'unsupported'
        return 'scs' if self.wave1 == SHOCK else 'rcs'

    @property
    def strength(self) -> float:
        return self.delta1 + self.delta_c + self.delta3

    @property
    def states(self) -> Tuple[FluidState, FluidState, FluidState, FluidState]:
        return self.minus, self.star_left, self.star_right, self.plus

    def shock_families(self) -> List[int]:
        """Families carrying a shock of positive strength."""
        families = []
        if self.wave1 == SHOCK and self.delta1 > 0:
            families.append(1)
        if self.wave3 == SHOCK and self.delta3 > 0:
            families.append(3)
        return families

    def shock_sides(self, family: int) -> Tuple[FluidState, FluidState]:
        """(left, right) states of a shock."""
        if family == 1:
            return self.minus, self.star_left
        return self.star_right, self.plus

    def shock_speed(self, family: int) -> float:
        return self.sigma1 if family == 1 else self.sigma3

    def shock_strength(self, family: int) -> float:
        return self.delta1 if family == 1 else self.delta3

    def fan(self) -> Optional[Tuple[float, float]]:
        """Edge speeds of the 1-rarefaction, if there is one."""
        if self.wave1 != RAREFACTION:
            return None
        return (self.minus.characteristic_speed(1),
                self.star_left.characteristic_speed(1))

    def state_at(self, xi: float) -> FluidState:
        """Self-similar solution at ``x/t = xi`` with unshifted shocks."""
        fan = self.fan()
        if fan is not None:
            if xi < fan[0]:
                return self.minus
            if xi < fan[1]:
                return rarefaction_fan_state(self.minus, xi)
            return self.star_left if xi < 0 else (
                self.star_right if xi < self.sigma3 else self.plus)
        if xi < self.sigma1:
            return self.minus
        if xi < 0:
            return self.star_left
        if xi < self.sigma3:
            return self.star_right
        return self.plus


def rarefaction_fan_state(base: FluidState, xi: float) -> FluidState:
    """State inside a centered 1-rarefaction fan where ``lambda_1 = xi``."""
    a = base.pressure * base.v ** (5.0 / 3.0)
    v = (math.sqrt(5.0 * a / 3.0) / abs(xi)) ** 0.75
    return _isentrope_point(base, v, 1)


def _wave_curve(
    base: FluidState,
    p: float,
    family: int,
) -> Tuple[FluidState, str, float]:
    """State connected to ``base`` by a ``family`` wave at pressure ``p``."""
    p0 = base.pressure
    if p >= p0:
        v = base.v * (p + 4.0 * p0) / (4.0 * p + p0)
        state, speed = _hugoniot_point(base, v, family)
        return state, SHOCK, speed
    v = base.v * (p0 / p) ** 0.6
    return _isentrope_point(base, v, family), RAREFACTION, math.nan


def solve_riemann(
    minus: FluidState,
    plus: FluidState,
    tol: float = 1e-12,
    max_iter: int = 60,
) -> WavePattern:
    """Solve the Riemann problem with left state ``minus`` and right state
    ``plus``.

    The intermediate pressure is found by Newton iteration on the velocity
    mismatch of the 1- and 3-wave curves, with a bracketing fallback.

    :raises RiemannError: with the residual history on vacuum or failure
    """
    minus.check()
    plus.check()
    residuals: List[float] = []

    def mismatch(p: float) -> float:
        left, _, _ = _wave_curve(minus, p, 1)
        right, _, _ = _wave_curve(plus, p, 3)
        value = left.u1 - right.u1
        residuals.append(abs(value))
        return value

    p_floor = 1e-12 * min(minus.pressure, plus.pressure)
    if mismatch(p_floor) < 0:
        raise errors.RiemannError(
            f"Riemann data {minus} | {plus} creates vacuum", residuals)

    p_guess = 0.5 * (minus.pressure + plus.pressure)
    try:
        p_star = optimize.newton(mismatch, p_guess, tol=1e-15 * p_guess,
                                 maxiter=max_iter)
        if not (p_star > 0 and abs(mismatch(p_star)) <= tol):
            raise RuntimeError("Newton iteration left the admissible range")
    except (RuntimeError, OverflowError, ZeroDivisionError):
        log.debug("Newton iteration failed, bracketing the pressure")
        p_high = max(minus.pressure, plus.pressure)
        while mismatch(p_high) > 0:
            p_high *= 2.0
            if len(residuals) > 10 * max_iter:
                raise errors.RiemannError("No pressure bracket found", residuals)
        p_star = optimize.brentq(mismatch, p_floor, p_high, xtol=1e-16,
                                 rtol=4 * np.finfo(float).eps, maxiter=10 * max_iter)

    if abs(mismatch(p_star)) > max(tol, 1e-13 * (1 + abs(minus.u1) + abs(plus.u1))):
        raise errors.RiemannError(
            f"Riemann solver did not converge, mismatch {residuals[-1]:.3e}",
            residuals)

    star_left, wave1, sigma1 = _wave_curve(minus, p_star, 1)
    star_right, wave3, sigma3 = _wave_curve(plus, p_star, 3)
    star_right = star_right._replace(u1=star_left.u1)
    pattern = WavePattern(
        minus, star_left, star_right, plus,
        wave1, wave3,
        abs(minus.v - star_left.v),
        abs(star_right.theta - star_left.theta),
        abs(star_right.v - plus.v),
        sigma1, sigma3)
    log.debug("Solved Riemann problem in %d evaluations: %s",
              len(residuals), pattern)
    return pattern


def construct_pattern(
    plus: FluidState,
    delta1: float,
    delta_c: float,
    delta3: float,
    first_wave: str = SHOCK,
    contact_sign: float = 1.0,
) -> WavePattern:
    """Build Riemann data with prescribed strengths, working from the right
    state to the left. ``contact_sign > 0`` makes ``theta^* > theta_*``.
    """
    plus.check()
    if min(delta1, delta_c, delta3) < 0:
        raise errors.RiemannError("Wave strengths must be non-negative")
    if first_wave not in (SHOCK, RAREFACTION):
        raise errors.RiemannError(f"Unknown first wave {first_wave}")
    star_right, sigma3 = hugoniot_state(plus, plus.v - delta3, 3)
    p = star_right.pressure
    theta_left = star_right.theta - math.copysign(delta_c, contact_sign)
    star_left = FluidState(2.0 * theta_left / (3.0 * p),
                           star_right.u1, theta_left).check()
    if first_wave == SHOCK:
        minus, sigma1 = _hugoniot_point(star_left, star_left.v + delta1, 1)
    else:
        minus = _isentrope_point(star_left, star_left.v - delta1, 1)
        sigma1 = math.nan
    minus.check()
    return WavePattern(minus, star_left, star_right, plus,
                       first_wave, SHOCK, delta1, delta_c, delta3, sigma1, sigma3)


def format_report(pattern: WavePattern) -> str:
    """Key-value text report of a wave pattern."""
    lines = [f"pattern = {pattern.kind}",
             f"wave1 = {pattern.wave1}",
             f"wave3 = {pattern.wave3}"]
    for name, state in zip(('minus', 'star_left', 'star_right', 'plus'),
                           pattern.states):
        lines.extend([f"{name}.v = {state.v!r}",
                      f"{name}.u1 = {state.u1!r}",
                      f"{name}.theta = {state.theta!r}",
                      f"{name}.p = {state.pressure!r}"])
    lines.extend([f"delta1 = {pattern.delta1!r}",
                  f"delta_c = {pattern.delta_c!r}",
                  f"delta3 = {pattern.delta3!r}",
                  f"sigma1 = {pattern.sigma1!r}",
                  f"sigma3 = {pattern.sigma3!r}"])
    return '\n'.join(lines) + '\n'
