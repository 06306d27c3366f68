"""
Composite waves with dynamical shifts.

A composite wave is assembled from the shifted shock profiles, the viscous
contact and the smoothed rarefaction of a :class:`krl.riemann.WavePattern`,
all evaluated in macroscopic variables ``(tau, y)`` at Knudsen number
``kappa``:

.. math::

    \\bar v = v^{S_1}(\\tfrac{y - \\sigma_1\\tau - X_1}{\\kappa}) + v^C
        + v^{S_3}(\\tfrac{y - \\sigma_3\\tau - X_3}{\\kappa}) - v_* - v^*

and alike for ``u_1`` and ``theta``. The shifts ``X_i`` follow the ODE

.. math::

    \\dot X_i = -\\frac{m_i}{\\delta_i}\\int a\\Big(
        (u_1^{S_i})_x\\psi_1 + (v^{S_i})_x\\frac{\\bar p}{\\bar v}\\phi
        + (\\theta^{S_i})_x\\frac{\\zeta}{\\bar\\theta}\\Big)dx

with the perturbation ``(phi, psi, zeta) = U - U_bar`` and the weight ``a``
built from the shock profiles.
"""
import logging
import math
from dataclasses import dataclass
from dataclasses import field as dataclass_field
from dataclasses import replace
from typing import Callable
from typing import Dict
from typing import List
from typing import Optional
from typing import Tuple
from typing import TYPE_CHECKING
from typing import Union

import numpy as np

from krl import errors
from krl import profiles as wave_profiles
from krl.gas import FluidState
from krl.grids import FluidField
from krl.grids import SpatialGrid
from krl.profiles import ContactProfile
from krl.profiles import ProfileTable
from krl.profiles import RarefactionWave
from krl.profiles import Transport
from krl.profiles import WaveFields
from krl.riemann import RAREFACTION
from krl.riemann import SHOCK
from krl.riemann import WavePattern

if TYPE_CHECKING:
    from krl.kinetic import StepInfo


log = logging.getLogger(__name__)

FAMILIES = (1, 3)

SHIFT_COLUMNS = ('t', 'X1', 'dX1', 'X3', 'dX3', 'TV1', 'TV3', 'sep_margin')


@dataclass
class WaveProfiles:
    """The profiles of every wave of a pattern at one Knudsen number."""
    pattern: WavePattern
    kappa: float
    transport: Transport
    shocks: Dict[int, ProfileTable]
    contact: Optional[ContactProfile] = None
    rarefaction: Optional[RarefactionWave] = None


def build_profiles(
    pattern: WavePattern,
    kappa: float,
    transport: Optional[Transport] = None,
    n_nodes: int = 4000,
) -> WaveProfiles:
    """Solve for every wave profile of ``pattern``. Profiles are in
    normalized variables, ``transport`` defaults to the coefficients of the
    BGK operator at unit Knudsen number.
    """
    if pattern.kind == 'unsupported':
        raise errors.ProfileError("No composite wave for a 3-rarefaction pattern")
    transport = transport or Transport.for_bgk()
    shocks = {}
    for family in pattern.shock_families():
        left, right = pattern.shock_sides(family)
        shocks[family] = wave_profiles.solve_shock_profile(
            family, left, right, pattern.shock_speed(family), transport,
            n_nodes=n_nodes)
    contact = None
    if pattern.kind != 'single3':
        star = pattern.star_left
        contact = wave_profiles.solve_contact_profile(
            star.theta, pattern.star_right.theta, star.pressure, star.u1, transport)
    rarefaction = None
    if pattern.wave1 == RAREFACTION and pattern.delta1 > 0:
        rarefaction = RarefactionWave(pattern.minus, pattern.star_left, kappa)
    log.debug("Built profiles for %s at kappa=%s", pattern.kind, kappa)
    return WaveProfiles(pattern, kappa, transport, shocks, contact, rarefaction)


# --------------------------------------------------------------------------
# Shifts


@dataclass(frozen=True)
class ShiftState:
    """Positions, speeds and accumulated variation of the shifts of the
    1-shock (index 0) and the 3-shock (index 1). Shifts of absent shocks
    stay at zero.
    """
    time: float
    positions: Tuple[float, float]
    velocities: Tuple[float, float]
    variation: Tuple[float, float]
    speeds: Tuple[float, float]
    active: Tuple[bool, bool]
    separated: bool = True

    @classmethod
    def start(cls, pattern: WavePattern, time: float = 0.0) -> "ShiftState":
        families = pattern.shock_families()
        speeds = tuple(pattern.shock_speed(f) if f in families else 0.0
                       for f in FAMILIES)
        active = tuple(f in families for f in FAMILIES)
        return cls(time, (0.0, 0.0), (0.0, 0.0), (0.0, 0.0),
                   speeds, active)  # type: ignore

    def position(self, family: int) -> float:
        return self.positions[FAMILIES.index(family)]

    def front(self, family: int) -> float:
        """Location ``sigma_i t + X_i`` of a shock."""
        k = FAMILIES.index(family)
        return self.speeds[k] * self.time + self.positions[k]

    @property
    def margin(self) -> float:
        """Distance to a violation of ``X_1 + sigma_1 t <= sigma_1 t/2`` and
        ``X_3 + sigma_3 t >= sigma_3 t/2``; negative when violated.
        """
        margins = []
        if self.active[0]:
            margins.append(-0.5 * self.speeds[0] * self.time - self.positions[0])
        if self.active[1]:
            margins.append(0.5 * self.speeds[1] * self.time + self.positions[1])
        return min(margins) if margins else math.inf

    def row(self) -> Tuple[float, ...]:
        return (self.time, self.positions[0], self.velocities[0],
                self.positions[1], self.velocities[1],
                self.variation[0], self.variation[1], self.margin)


ShiftRhs = Callable[[float, np.ndarray], np.ndarray]


def advance_shifts(
    state: ShiftState,
    rhs: Union[ShiftRhs, np.ndarray],
    dt: float,
    method: str = 'euler',
    tolerance: float = 1e-12,
) -> ShiftState:
    """Advance the shifts by ``dt`` with explicit Euler, Heun or the
    midpoint rule. ``rhs`` is a function of ``(t, positions)`` or a constant
    pair of speeds.
    """
    mask = np.array(state.active, dtype=float)
    if callable(rhs):
        fn = rhs
    else:
        constant = np.asarray(rhs, dtype=float)
        fn = lambda _t, _x: constant  # noqa: E731
    x = np.array(state.positions)
    t = state.time
    k1 = np.asarray(fn(t, x), dtype=float) * mask
    if not np.all(np.isfinite(k1)):
        raise errors.SeparationError(f"Shift speed is not finite at t={t}: {k1}")
    if method == 'euler':
        slope = k1
    elif method == 'heun':
        slope = 0.5 * (k1 + np.asarray(fn(t + dt, x + dt * k1)) * mask)
    elif method == 'midpoint':
        slope = np.asarray(fn(t + 0.5 * dt, x + 0.5 * dt * k1)) * mask
    else:
        raise errors.ConfigurationError(f"Unknown shift integrator: {method}")
    moved = dt * slope
    new = replace(
        state,
        time=t + dt,
        positions=tuple(x + moved),
        velocities=tuple(slope),
        variation=tuple(np.array(state.variation) + np.abs(moved)),
    )
    if new.margin < -tolerance and state.separated:
        log.warning("Shifts lost separation at t=%s (margin %.3e)",
                    new.time, new.margin)
        new = replace(new, separated=False)
    return new


def separation_margin(state: ShiftState) -> float:
    return state.margin


def m_coefficient(state: FluidState, gamma: float) -> float:
    """``(20/3) p / (c^3 v^2) (5 + 3 gamma) / (10 + 3 gamma)`` with the
    sound speed ``c`` of ``state``.
    """
    c = state.sound_speed
    return (20.0 / 3.0 * state.pressure / (c ** 3 * state.v ** 2)
            * (5.0 + 3.0 * gamma) / (10.0 + 3.0 * gamma))


def m_coefficients(pattern: WavePattern, gamma: float) -> Dict[int, float]:
    """Coefficients of both shifts, at ``U_*`` for the 1-shock and ``U^*``
    for the 3-shock. For a single shock ``U^* = U_-``.
    """
    return {1: m_coefficient(pattern.star_left, gamma),
            3: m_coefficient(pattern.star_right, gamma)}


# --------------------------------------------------------------------------
# Composite wave


@dataclass
class CompositeWave:
    fields: WaveFields
    shocks: Dict[int, WaveFields]
    contact: Optional[WaveFields]
    rarefaction: Optional[WaveFields]
    shifts: ShiftState
    time: float

    def check(self) -> "CompositeWave":
        if np.any(self.fields.v <= 0) or np.any(self.fields.theta <= 0):
            raise errors.StateError(f"Inadmissible composite wave at t={self.time}")
        return self


def _sum_fields(parts: List[WaveFields], constant: np.ndarray) -> WaveFields:
    total = [sum(columns) for columns in zip(*parts)]
    for k in range(3):
        total[k] = total[k] - constant[k]
    return WaveFields(*total)


def _check_profiles(pattern: WavePattern, profiles: WaveProfiles) -> None:
    missing = [f for f in pattern.shock_families() if f not in profiles.shocks]
    if missing:
        raise errors.ProfileError("Missing shock profile", families=missing)
    if pattern.kind != 'single3' and profiles.contact is None:
        raise errors.ProfileError("Missing contact profile", kind=pattern.kind)
    rarefaction = pattern.wave1 == RAREFACTION and pattern.delta1 > 0
    if rarefaction and profiles.rarefaction is None:
        raise errors.ProfileError("Missing rarefaction profile",
                                  delta1=pattern.delta1)


def _check_cover(pattern: WavePattern, shifts: ShiftState, t: float,
                 space: SpatialGrid) -> None:
    fronts = [shifts.front(f) for f in pattern.shock_families()]
    fan = pattern.fan()
    if fan is not None:
        fronts.extend([fan[0] * t, fan[1] * t])
    for front in fronts:
        if not space.x_left < front < space.x_right:
            raise errors.GridError(
                f"Grid [{space.x_left}, {space.x_right}] does not cover the wave "
                f"at {front} (t={t})")


def assemble_composite(
    pattern: WavePattern,
    profiles: WaveProfiles,
    shifts: ShiftState,
    t: float,
    space: SpatialGrid,
) -> CompositeWave:
    """Composite wave at macroscopic time ``t`` on the cell centers of
    ``space`` with the given shifts.

    :raises ProfileError: if a wave of ``pattern`` has no profile
    :raises GridError: if a wave lies outside the grid
    """
    _check_profiles(pattern, profiles)
    _check_cover(pattern, replace(shifts, time=t), t, space)
    x = space.centers
    kappa = profiles.kappa
    shocks = {}
    for family in pattern.shock_families():
        front = pattern.shock_speed(family) * t + shifts.position(family)
        shocks[family] = profiles.shocks[family].fields(x, front, kappa)

    if pattern.kind == 'single3':
        fields = shocks[3] if 3 in shocks else WaveFields.constant(pattern.plus, x)
        return CompositeWave(fields, shocks, None, None, shifts, t).check()

    star_left, star_right = pattern.star_left, pattern.star_right
    rarefaction = None
    if 1 in shocks:
        first = shocks[1]
    elif profiles.rarefaction is not None:
        rarefaction = first = profiles.rarefaction.fields(t, x)
    else:
        first = WaveFields.constant(star_left, x)
    assert profiles.contact is not None
    contact = profiles.contact.scaled_fields(t, x, kappa)
    third = shocks.get(3, WaveFields.constant(star_right, x))
    constant = star_left.as_array() + star_right.as_array()
    fields = _sum_fields([first, contact, third], constant)
    return CompositeWave(fields, shocks, contact, rarefaction, shifts, t).check()


# --------------------------------------------------------------------------
# Weights and cutoffs


@dataclass
class WeightField:
    """``a = a_1 + a_3 - 1`` with x-derivatives."""
    a: np.ndarray
    a_x: np.ndarray
    a1: np.ndarray
    a1_x: np.ndarray
    a3: np.ndarray
    a3_x: np.ndarray

    def component(self, family: int) -> Tuple[np.ndarray, np.ndarray]:
        return (self.a1, self.a1_x) if family == 1 else (self.a3, self.a3_x)


def _component_weight(shock: Optional[WaveFields], base_v: float, delta: float,
                      size: int) -> Tuple[np.ndarray, np.ndarray]:
    if shock is None or delta == 0:
        return np.ones(size), np.zeros(size)
    root = math.sqrt(delta)
    return 1.0 + (shock.v - base_v) / root, shock.v_x / root


def weight(composite: CompositeWave, pattern: WavePattern) -> WeightField:
    """Weight of the composite wave, the single-shock weight for a single
    3-shock pattern.
    """
    if pattern.kind == 'single3':
        return single_shock_weight(composite, pattern)
    size = len(composite.fields.v)
    a1, a1_x = _component_weight(composite.shocks.get(1), pattern.minus.v,
                                 pattern.delta1, size)
    a3, a3_x = _component_weight(composite.shocks.get(3), pattern.star_right.v,
                                 pattern.delta3, size)
    return WeightField(a1 + a3 - 1.0, a1_x + a3_x, a1, a1_x, a3, a3_x)


def single_shock_weight(
    composite: CompositeWave,
    pattern: WavePattern,
) -> WeightField:
    """``a = 1 + (v_bar - v_-) / sqrt(delta)``."""
    size = len(composite.fields.v)
    a, a_x = _component_weight(composite.fields, pattern.minus.v, pattern.delta3,
                               size)
    ones, zeros = np.ones(size), np.zeros(size)
    return WeightField(a, a_x, ones, zeros, a, a_x)


@dataclass
class Cutoffs:
    phi1: np.ndarray
    phi3: np.ndarray
    slope: float


def cutoffs(shifts: ShiftState, t: float, space: SpatialGrid) -> Cutoffs:
    """``phi_1`` is one left of ``(X_1 + sigma_1 t)/2``, zero right of
    ``(X_3 + sigma_3 t)/2`` and linear between; ``phi_3 = 1 - phi_1``.

    :raises SeparationError: if the breakpoints are out of order
    """
    at = replace(shifts, time=t)
    left, right = 0.5 * at.front(1), 0.5 * at.front(3)
    x = space.centers
    if right < left:
        raise errors.SeparationError(
            f"Shock fronts crossed at t={t}: {2 * left} > {2 * right}")
    if right == left:
        phi1 = (x <= left).astype(float)
        slope = math.inf
    else:
        phi1 = np.clip((right - x) / (right - left), 0.0, 1.0)
        slope = 1.0 / (right - left)
    return Cutoffs(phi1, 1.0 - phi1, slope)


def interaction_integrals(composite: CompositeWave, cut: Cutoffs,
                          space: SpatialGrid) -> Tuple[float, float]:
    """``int phi_3 |v^{S_1}_x|`` and ``int phi_1 |v^{S_3}_x|``."""
    values = []
    for family, phi in ((1, cut.phi3), (3, cut.phi1)):
        shock = composite.shocks.get(family)
        values.append(0.0 if shock is None
                      else float(np.sum(phi * np.abs(shock.v_x)) * space.dx))
    return values[0], values[1]


# --------------------------------------------------------------------------
# Shift speeds


@dataclass
class Perturbation:
    """``(phi, psi, zeta) = U - U_bar`` on the cells."""
    phi: np.ndarray
    psi: np.ndarray
    zeta: np.ndarray

    @classmethod
    def between(cls, fluid: FluidField, composite: CompositeWave) -> "Perturbation":
        bar = composite.fields
        if len(fluid) != len(bar.v):
            raise errors.GridError(
                "Fluid and composite wave live on different grids")
        psi = fluid.u.copy()
        psi[:, 0] -= bar.u1
        return cls(fluid.v - bar.v, psi, fluid.theta - bar.theta)

    def sup_norm(self) -> float:
        return float(max(np.max(np.abs(self.phi)), np.max(np.abs(self.psi)),
                         np.max(np.abs(self.zeta))))

    def squared(self) -> np.ndarray:
        return self.phi ** 2 + np.sum(self.psi ** 2, axis=1) + self.zeta ** 2


def modulation_terms(
    perturbation: Perturbation,
    composite: CompositeWave,
    weights: WeightField,
    family: int,
    space: SpatialGrid,
) -> Tuple[float, float, float]:
    """The first three modulation functionals of the ``family`` shock:
    ``int a (u1^S)_x psi_1``, ``int a (v^S)_x p_bar/v_bar phi`` and ``int a
    (theta^S)_x zeta/theta_bar``.
    """
    shock = composite.shocks.get(family)
    if shock is None:
        return 0.0, 0.0, 0.0
    bar = composite.fields
    p_bar = 2.0 * bar.theta / (3.0 * bar.v)
    a, dx = weights.a, space.dx
    y1 = float(np.sum(a * shock.u1_x * perturbation.psi[:, 0]) * dx)
    y2 = float(np.sum(a * shock.v_x * p_bar / bar.v * perturbation.phi) * dx)
    y3 = float(np.sum(a * shock.theta_x / bar.theta * perturbation.zeta) * dx)
    return y1, y2, y3


def shift_rhs(
    fluid: FluidField,
    composite: CompositeWave,
    weights: WeightField,
    pattern: WavePattern,
    gamma: float,
    space: SpatialGrid,
) -> np.ndarray:
    """Shift speeds ``(X_1', X_3')``, zero for a shock of zero strength."""
    perturbation = Perturbation.between(fluid, composite)
    coefficients = m_coefficients(pattern, gamma)
    speeds = np.zeros(2)
    for k, family in enumerate(FAMILIES):
        delta = pattern.shock_strength(family)
        if family not in pattern.shock_families() or delta == 0:
            continue
        terms = modulation_terms(perturbation, composite, weights, family, space)
        speeds[k] = -coefficients[family] / delta * sum(terms)
    return speeds


def speed_bound(composite: CompositeWave, pattern: WavePattern, gamma: float,
                weights: WeightField, space: SpatialGrid) -> np.ndarray:
    """Constants ``C_i`` with ``|X_i'| <= C_i ||(phi, psi, zeta)||_inf``."""
    bar = composite.fields
    p_bar = 2.0 * bar.theta / (3.0 * bar.v)
    coefficients = m_coefficients(pattern, gamma)
    bounds = np.zeros(2)
    for k, family in enumerate(FAMILIES):
        shock = composite.shocks.get(family)
        if shock is None:
            continue
        density = np.abs(weights.a) * (np.abs(shock.u1_x)
                                       + np.abs(shock.v_x) * p_bar / bar.v
                                       + np.abs(shock.theta_x) / bar.theta)
        bounds[k] = (coefficients[family] / pattern.shock_strength(family)
                     * float(np.sum(density) * space.dx))
    return bounds


# --------------------------------------------------------------------------
# Coupling to the kinetic run


def _mean_fluid(a: FluidField, b: FluidField, time: float) -> FluidField:
    return FluidField(0.5 * (a.v + b.v), 0.5 * (a.u + b.u),
                      0.5 * (a.theta + b.theta), time)


@dataclass
class ShiftHistory:
    rows: List[Tuple[float, ...]] = dataclass_field(default_factory=list)

    def array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float).reshape(-1, len(SHIFT_COLUMNS))

    def positions_at(self, t: float) -> Tuple[float, float]:
        data = self.array()
        return (float(np.interp(t, data[:, 0], data[:, 1])),
                float(np.interp(t, data[:, 0], data[:, 3])))

    def rescaled(self, kappa: float) -> np.ndarray:
        """Columns ``t, X1, X3`` of ``X^kappa(tau) = kappa X(tau/kappa)``
        for a history recorded in normalized variables.
        """
        data = self.array()
        return np.column_stack([kappa * data[:, 0], kappa * data[:, 1],
                                kappa * data[:, 3]])


class ShiftTracker:
    """Observer integrating the shift ODE alongside a kinetic run with the
    midpoint rule, the right hand side being evaluated with the fluid state
    averaged over the step.

    With ``strict`` a loss of separation raises :class:`SeparationError`,
    otherwise the state is only flagged.
    """

    stride = 1

    def __init__(
        self,
        pattern: WavePattern,
        profiles: WaveProfiles,
        space: SpatialGrid,
        gamma: Optional[float] = None,
        method: str = 'midpoint',
        strict: bool = False,
    ) -> None:
        self.pattern    = pattern
        self.profiles   = profiles
        self.space      = space
        self.gamma      = profiles.transport.gamma if gamma is None else gamma
        self.method     = method
        self.strict     = strict
        self.state      = ShiftState.start(pattern)
        self.history    = ShiftHistory([self.state.row()])

    def rhs_for(self, fluid: FluidField) -> ShiftRhs:
        def rhs(t: float, positions: np.ndarray) -> np.ndarray:
            shifts = replace(self.state, time=t, positions=tuple(positions))
            composite = assemble_composite(
                self.pattern, self.profiles, shifts, t, self.space)
            weights = weight(composite, self.pattern)
            return shift_rhs(fluid, composite, weights, self.pattern, self.gamma,
                             self.space)
        return rhs

    def __call__(self, info: "StepInfo") -> None:
        start = info.time - info.dt
        middle = _mean_fluid(info.previous, info.fluid, start + 0.5 * info.dt)
        rhs_start = self.rhs_for(info.previous)
        rhs_middle = self.rhs_for(middle)

        def rhs(t: float, positions: np.ndarray) -> np.ndarray:
            if t == start:
                return rhs_start(t, positions)
            return rhs_middle(t, positions)

        self.state = advance_shifts(
            replace(self.state, time=start), rhs, info.dt, self.method)
        self.history.rows.append(self.state.row())
        if self.strict and not self.state.separated:
            raise errors.SeparationError(
                f"Shifts lost separation at t={self.state.time} "
                f"(margin {self.state.margin:.3e})")
