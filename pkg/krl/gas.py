"""
Closure of the monatomic gas in Lagrangian variables.

The macroscopic unknowns are the specific volume ``v``, the velocity ``u``
and the temperature ``theta``. The internal energy is ``e = theta`` and the
pressure is ``p = 2 theta / (3 v)``, so that ``p = R rho theta`` with the gas
constant ``R = 2/3``. The specific entropy ``s = ln(theta v^(2/3))`` is
derived from these two relations.
"""
from typing import NamedTuple
from typing import Tuple
from typing import Union

import numpy as np

from krl import errors


GAS_CONSTANT = 2.0 / 3.0

ArrayLike = Union[float, np.ndarray]


def pressure(v: ArrayLike, theta: ArrayLike) -> ArrayLike:
    return 2.0 * theta / (3.0 * v)


def sound_speed(v: ArrayLike, theta: ArrayLike) -> ArrayLike:
    """Lagrangian sound speed, the magnitude of the 1- and 3-characteristic
    speeds ``sqrt(5 p / (3 v))``.
    """
    return np.sqrt(5.0 * pressure(v, theta) / (3.0 * v))


def entropy(v: ArrayLike, theta: ArrayLike) -> ArrayLike:
    return np.log(theta * v ** (2.0 / 3.0))


def isentrope_temperature(v: ArrayLike, v_ref: float, theta_ref: float) -> ArrayLike:
    return theta_ref * (v_ref / v) ** (2.0 / 3.0)


class FluidState(NamedTuple):
    """Macroscopic state at one point."""
    v: float
    u1: float
    theta: float
    u2: float = 0.0
    u3: float = 0.0

    @property
    def velocity(self) -> np.ndarray:
        return np.array([self.u1, self.u2, self.u3])

    @property
    def rho(self) -> float:
        return 1.0 / self.v

    @property
    def pressure(self) -> float:
        return float(pressure(self.v, self.theta))

    @property
    def sound_speed(self) -> float:
        return float(sound_speed(self.v, self.theta))

    @property
    def entropy(self) -> float:
        return float(entropy(self.v, self.theta))

    def characteristic_speed(self, family: int) -> float:
        """``-c`` for the 1-family, ``+c`` for the 3-family, 0 for the contact."""
        return {1: -1.0, 2: 0.0, 3: 1.0}[family] * self.sound_speed

    def reflected(self) -> "FluidState":
        """The state seen under ``x -> -x``."""
        return self._replace(u1=-self.u1)

    def as_array(self) -> np.ndarray:
        return np.array([self.v, self.u1, self.theta])

    def distance(self, other: "FluidState") -> float:
        return float(np.max(np.abs(np.subtract(self, other))))

    def check(self) -> "FluidState":
        if not (self.v > 0 and self.theta > 0):
            raise errors.StateError(f"Inadmissible state {self}")
        if not np.all(np.isfinite(tuple(self))):
            raise errors.StateError(f"Non-finite state {self}")
        return self


def check_states(*states: FluidState) -> Tuple[FluidState, ...]:
    return tuple(state.check() for state in states)
