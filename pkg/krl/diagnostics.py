"""
Functionals evaluated along kinetic runs.

All integrals are midpoint sums over the cells of the run, in the
macroscopic variables of the solver, and x-derivatives are second order
centered differences on the same grid. The report columns are listed in
:data:`DIAGNOSTIC_COLUMNS`:

weighted_entropy
    ``int a eta(U | U_bar)``
Y<i><j>
    modulation functionals of the ``i``-shock, ``j = 1..6``
G<i>
    ``int |v^{S_i}_x| phi_i^2 |(phi, psi, zeta)|^2``
good
    ``sum_i sigma_i int (a_i)_x eta``
D_mac, D_mic
    macroscopic and microscopic dissipation
rem_norm, contact_norm
    ``int ||G_rem||^2_{M#}`` and ``int ||G_C||^2_{M#}``
E_*
    components of the energy functional
W_C
    Gaussian weighted contact sample
"""
import logging
import math
from dataclasses import dataclass
from dataclasses import field as dataclass_field
from typing import Callable
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple
from typing import TYPE_CHECKING

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate
from scipy import stats

from krl import errors
from krl import macromicro
from krl import modulation
from krl.grids import DistributionField
from krl.grids import FluidField
from krl.grids import SpatialGrid
from krl.grids import VelocityGrid
from krl.modulation import CompositeWave
from krl.modulation import Cutoffs
from krl.modulation import Perturbation
from krl.modulation import WaveProfiles
from krl.modulation import WeightField
from krl.profiles import Transport
from krl.riemann import WavePattern
from krl.riemann import rarefaction_fan_state

if TYPE_CHECKING:
    from krl.kinetic import StepInfo


log = logging.getLogger(__name__)

DIAGNOSTIC_COLUMNS = (
    't', 'weighted_entropy',
    'Y11', 'Y12', 'Y13', 'Y14', 'Y15', 'Y16',
    'Y31', 'Y32', 'Y33', 'Y34', 'Y35', 'Y36',
    'G1', 'G3', 'good', 'D_mac', 'D_mic', 'rem_norm', 'contact_norm',
    'E_h1', 'E_rem', 'E_Gx', 'E_fxx', 'E_ftx', 'E_mic', 'E0', 'equivalence',
    'W_C', 'shift_rhs1', 'shift_rhs3', 'sup_norm',
)


@dataclass
class EntropyReport:
    """Functionals of one sample. ``modulation[i]`` holds ``Y_i1..Y_i6``."""
    t: float
    weighted_entropy: float
    modulation: Dict[int, Tuple[float, ...]]
    coercivity: Dict[int, float]
    good: float
    d_mac: float
    d_mic: float
    rem_norm: float
    contact_norm: float
    energy: Dict[str, float]
    w_c: float
    shift_rhs: Tuple[float, float]
    sup_norm: float = 0.0

    def as_row(self) -> Dict[str, float]:
        row = {'t': self.t, 'weighted_entropy': self.weighted_entropy}
        for family in modulation.FAMILIES:
            terms = self.modulation.get(family, (0.0,) * 6)
            for j, value in enumerate(terms, 1):
                row[f"Y{family}{j}"] = value
            row[f"G{family}"] = self.coercivity.get(family, 0.0)
        row.update({
            'good': self.good,
            'D_mac': self.d_mac,
            'D_mic': self.d_mic,
            'rem_norm': self.rem_norm,
            'contact_norm': self.contact_norm,
            'W_C': self.w_c,
            'shift_rhs1': self.shift_rhs[0],
            'shift_rhs3': self.shift_rhs[1],
            'sup_norm': self.sup_norm,
        })
        row.update(self.energy)
        return row

    def signs_hold(self, slack: float = 0.0) -> bool:
        """Non-negativity of every functional that is a square or a
        weighted square.
        """
        values = [self.weighted_entropy, self.good, self.d_mac, self.d_mic,
                  self.rem_norm, self.contact_norm]
        values.extend(self.coercivity.values())
        return all(value >= -slack for value in values)


def macroscopic_transport(profiles: WaveProfiles) -> Transport:
    """Transport coefficients in macroscopic variables."""
    transport = profiles.transport
    return Transport(transport.mu0 * profiles.kappa, transport.gamma)


def _derivative(values: np.ndarray, dx: float) -> np.ndarray:
    return np.gradient(values, dx, axis=0)


@dataclass
class MicroParts:
    """``G_tilde = G - sum G^{S_i}``, its contact part and remainder."""
    maxwellian: np.ndarray
    tilde: np.ndarray
    contact: np.ndarray
    remainder: np.ndarray
    shocks: Dict[int, np.ndarray]

    def shock_sum(self) -> np.ndarray:
        total = np.zeros_like(self.tilde)
        for values in self.shocks.values():
            total += values
        return total


def micro_parts(
    field: DistributionField,
    fluid: FluidField,
    composite: CompositeWave,
    kappa: float,
) -> MicroParts:
    grid = field.velocity
    maxwellian = macromicro.discrete_maxwellian_field(fluid, grid)
    micro = macromicro.micro_projection(field.values, maxwellian, grid)
    shock_micro = np.zeros_like(micro)
    shocks: Dict[int, np.ndarray] = {}
    for family, shock in composite.shocks.items():
        part = macromicro.shock_micro_part(shock, kappa, grid)
        shock_micro += part
        shocks[family] = macromicro.wave_maxwellian(shock, grid) + part
    tilde = micro - shock_micro
    if composite.contact is not None:
        nu = macromicro.collision_frequency(fluid.rho, fluid.theta, kappa)
        local = macromicro.fields_from_fluid(fluid, field.space.dx)
        contact = macromicro.contact_micro_part(maxwellian, local, composite.contact,
                                                nu, grid)
    else:
        contact = np.zeros_like(micro)
    return MicroParts(maxwellian, tilde, contact, tilde - contact, shocks)


def entropy_ledger(
    field: DistributionField,
    composite: CompositeWave,
    weights: WeightField,
    cut: Optional[Cutoffs],
    pattern: WavePattern,
    profiles: WaveProfiles,
    reference: np.ndarray,
    kappa_1: float = 0.1,
    contact_rate: Optional[float] = None,
) -> EntropyReport:
    """Evaluate every functional of the weighted relative entropy method
    at the state ``field`` around ``composite``.

    :raises GridError: if the field and the composite live on different
        grids
    """
    space, grid = field.space, field.velocity
    dx, kappa = space.dx, profiles.kappa
    fluid = field.fluid()
    pert = Perturbation.between(fluid, composite)
    bar = composite.fields
    a = weights.a
    eta = macromicro.relative_entropy_density(
        fluid.v, fluid.u, fluid.theta, bar.v,
        np.column_stack([bar.u1, np.zeros_like(bar.u1), np.zeros_like(bar.u1)]),
        bar.theta)
    gamma = profiles.transport.gamma

    terms: Dict[int, Tuple[float, ...]] = {}
    coercivity: Dict[int, float] = {}
    good = 0.0
    for family in pattern.shock_families():
        shock = composite.shocks[family]
        y1, y2, y3 = modulation.modulation_terms(pert, composite, weights, family,
                                                 space)
        a_i_x = weights.component(family)[1]
        y4 = float(np.sum(2.0 / 3.0 * a * shock.theta_x
                          * macromicro.entropy_potential(fluid.v / bar.v)) * dx)
        potential = macromicro.entropy_potential(fluid.theta / bar.theta)
        y5 = float(np.sum(a * shock.theta_x * potential) * dx)
        y6 = -float(np.sum(a_i_x * eta) * dx)
        terms[family] = (y1, y2, y3, y4, y5, y6)
        good += pattern.shock_speed(family) * float(np.sum(a_i_x * eta) * dx)
        if cut is None:
            localizer = np.ones_like(a)
        else:
            localizer = cut.phi1 if family == 1 else cut.phi3
        coercivity[family] = float(np.sum(np.abs(shock.v_x) * localizer ** 2
                                          * pert.squared()) * dx)

    speeds = modulation.shift_rhs(fluid, composite, weights, pattern, gamma, space)

    transport = macroscopic_transport(profiles)
    zeta_x = _derivative(pert.zeta, dx)
    psi_x = _derivative(pert.psi, dx)
    transverse = np.sum(psi_x[:, 1:] ** 2, axis=1)
    d_mac = float(np.sum(a * (
        transport.alpha(bar.theta) / (fluid.v * fluid.theta) * zeta_x ** 2
        + 4.0 / 3.0 * transport.mu(bar.theta) / fluid.v * psi_x[:, 0] ** 2
        + transport.mu(fluid.theta) / fluid.v * transverse)) * dx)

    parts = micro_parts(field, fluid, composite, kappa)
    rem_density = macromicro.norm_sq(parts.remainder, reference, grid)
    rem_norm = float(np.sum(rem_density) * dx)
    contact_density = macromicro.norm_sq(parts.contact, reference, grid)
    contact_norm = float(np.sum(contact_density) * dx)
    rem_nu_density = macromicro.nu_norm_sq(parts.remainder, reference, grid)
    d_mic = float(np.sum(a * rem_nu_density) * dx)

    tilde_x = _derivative(parts.tilde, dx)
    f_tilde = field.values - parts.shock_sum()
    f_tilde_x = _derivative(f_tilde, dx)
    nu = macromicro.collision_frequency(fluid.rho, fluid.theta, kappa)
    f_x = _derivative(field.values, dx)
    f_t = (-(grid.xi1[None, :] - fluid.u1[:, None]) / fluid.v[:, None] * f_x
           + nu[:, None] * (parts.maxwellian - field.values))
    shock_t = np.zeros_like(f_t)
    for k, family in enumerate(modulation.FAMILIES):
        if family in parts.shocks:
            speed = pattern.shock_speed(family) + composite.shifts.velocities[k]
            shock_t -= speed * _derivative(parts.shocks[family], dx)

    def integral(values: np.ndarray) -> float:
        return float(np.sum(macromicro.norm_sq(values, reference, grid)) * dx)

    pert_sq = float(np.sum(pert.squared()) * dx)
    pert_x_sq = float(np.sum(_derivative(pert.phi, dx) ** 2
                             + np.sum(psi_x ** 2, axis=1) + zeta_x ** 2) * dx)
    weighted_entropy = float(np.sum(a * eta) * dx)
    e_mic = rem_norm
    e0 = weighted_entropy + kappa_1 * e_mic
    energy = {
        'E_h1': pert_sq + pert_x_sq,
        'E_rem': rem_norm,
        'E_Gx': integral(tilde_x),
        'E_fxx': integral(_derivative(f_tilde_x, dx)),
        'E_ftx': integral(_derivative(f_t - shock_t, dx)),
        'E_mic': e_mic,
        'E0': e0,
        'equivalence': e0 / (pert_sq + e_mic) if pert_sq + e_mic > 0 else math.nan,
    }

    w_c = 0.0
    if contact_rate is not None and composite.contact is not None:
        t_norm = composite.time / kappa
        x_norm = space.centers / kappa
        gauss = np.exp(-2.0 * contact_rate * x_norm ** 2 / (1.0 + t_norm))
        w_c = float(np.sum(gauss * pert.squared()) * dx / kappa / (1.0 + t_norm))

    return EntropyReport(
        composite.time, weighted_entropy, terms, coercivity, good, d_mac, d_mic,
        rem_norm, contact_norm, energy, w_c, (float(speeds[0]), float(speeds[1])),
        pert.sup_norm())


def shift_identity_residual(report: EntropyReport, pattern: WavePattern,
                            gamma: float) -> float:
    """Largest difference between the shift speeds and
    ``-(m_i/delta_i)(Y_i1 + Y_i2 + Y_i3)``.
    """
    coefficients = modulation.m_coefficients(pattern, gamma)
    residual = 0.0
    for k, family in enumerate(modulation.FAMILIES):
        if family not in report.modulation:
            continue
        y = report.modulation[family]
        strength = pattern.shock_strength(family)
        expected = -coefficients[family] / strength * sum(y[:3])
        residual = max(residual, abs(expected - report.shift_rhs[k]))
    return residual


# --------------------------------------------------------------------------
# Limits


def riemann_states(
    pattern: WavePattern,
    positions: Tuple[float, float],
    t: float,
    space: SpatialGrid,
) -> FluidField:
    """Entropy solution of the Riemann problem at time ``t`` with the
    shocks shifted by ``positions``.
    """
    x = space.centers
    families = pattern.shock_families()
    fronts = [pattern.shock_speed(f) * t + positions[k] if f in families else 0.0
              for k, f in enumerate(modulation.FAMILIES)]
    values = np.empty((len(x), 3))
    if pattern.kind == 'single3':
        values[:] = np.where((x < fronts[1])[:, None], pattern.minus.as_array(),
                             pattern.plus.as_array())
    else:
        values[x < 0] = pattern.star_left.as_array()
        values[x >= 0] = pattern.star_right.as_array()
        values[x >= fronts[1]] = pattern.plus.as_array()
        fan = pattern.fan()
        if fan is None:
            values[x < fronts[0]] = pattern.minus.as_array()
        else:
            values[x < fan[1] * t] = pattern.star_left.as_array()
            inside = np.flatnonzero((x >= fan[0] * t) & (x < fan[1] * t) & (t > 0))
            for j in inside:
                values[j] = rarefaction_fan_state(pattern.minus, x[j] / t).as_array()
            values[x < fan[0] * t] = pattern.minus.as_array()
    zeros = np.zeros(len(x))
    return FluidField(values[:, 0], np.column_stack([values[:, 1], zeros, zeros]),
                      values[:, 2], t)


def frame_limit_error(
    field: DistributionField,
    pattern: WavePattern,
    positions: Tuple[float, float],
) -> float:
    """``int int |f - M_X[U^E]|^2 dxi dx`` at the time of ``field``."""
    target = macromicro.discrete_maxwellian_field(
        riemann_states(pattern, positions, field.time, field.space), field.velocity)
    return float(np.sum(((field.values - target) ** 2) @ field.velocity.weights)
                 * field.space.dx)


PositionFn = Callable[[float], Tuple[float, float]]


def l2_limit_error(
    frames: Sequence[DistributionField],
    pattern: WavePattern,
    positions: PositionFn,
) -> float:
    """Space, velocity and time quadrature of the squared distance of
    ``frames`` to the shifted Riemann Maxwellian, trapezoidal in time.

    :raises DiagnosticError: with fewer than two frames or unordered times
    """
    if len(frames) < 2:
        raise errors.DiagnosticError("Need at least two frames for a time integral")
    times = np.array([frame.time for frame in frames])
    if np.any(np.diff(times) <= 0):
        raise errors.DiagnosticError("Frames are not ordered in time")
    values = [frame_limit_error(frame, pattern, positions(frame.time))
              for frame in frames]
    return float(integrate.trapezoid(values, times))


class LimitErrorObserver:
    """Accumulates :func:`frame_limit_error` at the observer stride."""

    def __init__(self, pattern: WavePattern, positions: PositionFn,
                 stride: Optional[int] = None) -> None:
        self.pattern    = pattern
        self.positions  = positions
        self.times: List[float] = []
        self.values: List[float] = []
        if stride is not None:
            self.stride = stride

    def add(self, field: DistributionField) -> None:
        self.times.append(field.time)
        self.values.append(frame_limit_error(field, self.pattern,
                                             self.positions(field.time)))

    def __call__(self, info: "StepInfo") -> None:
        self.add(info.field)

    def integral(self) -> float:
        if len(self.times) < 2:
            raise errors.DiagnosticError("Too few limit error samples")
        return float(integrate.trapezoid(self.values, self.times))


@dataclass
class TailReport:
    """Distance of ``f`` to the two sided shifted Maxwellian per cell."""
    distance: np.ndarray
    norms: np.ndarray
    plateau: float
    rate: float
    constant: float
    center: float


def single_shock_pointwise(
    field: DistributionField,
    pattern: WavePattern,
    shift: float,
    kappa: float,
    reference: np.ndarray,
    window: Tuple[float, float] = (2.0, 10.0),
    plateau_distance: float = 20.0,
) -> TailReport:
    """Per cell ``||f - M_E||_{M#}`` where ``M_E`` is ``M[U_-]`` left of the
    shifted shock and ``M[U_+]`` right of it. The exponential rate is fitted
    on ``window[0] kappa <= |y - front| <= window[1] kappa`` and the plateau
    is the mean beyond ``plateau_distance kappa``.

    :raises DiagnosticError: if the fit window or the plateau region holds
        too few cells
    """
    space, grid = field.space, field.velocity
    front = pattern.sigma3 * field.time + shift
    distance = space.centers - front
    left = macromicro.discrete_maxwellian(pattern.minus, grid)
    right = macromicro.discrete_maxwellian(pattern.plus, grid)
    target = np.where((distance < 0)[:, None], left, right)
    norms = np.sqrt(macromicro.norm_sq(field.values - target, reference, grid))
    gap = np.abs(distance)
    far = gap >= plateau_distance * kappa
    if np.count_nonzero(far) < 2:
        raise errors.DiagnosticError("No cells in the plateau region")
    fit = (gap >= window[0] * kappa) & (gap <= window[1] * kappa) & (norms > 0)
    if np.count_nonzero(fit) < 4:
        raise errors.DiagnosticError(
            f"Fit window {window} holds {np.count_nonzero(fit)} cells, too narrow")
    regression = stats.linregress(gap[fit], np.log(norms[fit]))
    rate = -float(regression.slope)
    center = float(norms[np.argmin(gap)])
    plateau = float(np.mean(norms[far]))
    return TailReport(distance, norms, plateau, rate, rate * kappa, center)


# --------------------------------------------------------------------------
# Inequalities


def poincare_gap(coefficients: Sequence[float]) -> float:
    """``(1/2) int y(1-y)|f'|^2 - int |f - mean f|^2`` on ``[0, 1]`` for the
    polynomial with the given coefficients, by exact integration.
    """
    f = Polynomial(coefficients)
    mean = f.integ()(1.0) - f.integ()(0.0)
    centered = (f - mean) ** 2
    lhs = centered.integ()(1.0) - centered.integ()(0.0)
    weight = Polynomial([0.0, 1.0, -1.0])
    rhs_poly = weight * f.deriv() ** 2
    rhs = 0.5 * (rhs_poly.integ()(1.0) - rhs_poly.integ()(0.0))
    return float(rhs - lhs)


@dataclass
class BVChain:
    """``TV(X; [0, T]) <= sqrt(T) (int_0^T |X'|^2)^(1/2)``."""
    variation: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.variation <= self.bound * (1.0 + 1e-12)


def bv_chain(times: np.ndarray, positions: np.ndarray) -> BVChain:
    """Both sides of the Cauchy-Schwarz chain for a shift recorded at
    ``times``, with the speed constant between samples.
    """
    times = np.asarray(times, dtype=float)
    positions = np.asarray(positions, dtype=float)
    dt = np.diff(times)
    dx = np.diff(positions)
    if np.any(dt <= 0):
        raise errors.DiagnosticError("Shift samples are not ordered in time")
    variation = float(np.sum(np.abs(dx)))
    energy = float(np.sum(dx ** 2 / dt))
    span = float(times[-1] - times[0])
    return BVChain(variation, math.sqrt(span * energy))


def shift_l1_distance(times: np.ndarray, positions: np.ndarray,
                      reference: Callable[[np.ndarray], np.ndarray]) -> float:
    """``||X - X_ref||_{L^1}`` by the trapezoidal rule."""
    return float(integrate.trapezoid(np.abs(positions - reference(times)), times))


@dataclass
class DiagnosticsObserver:
    """Collects :class:`EntropyReport` rows along a run, reading the shifts
    from a :class:`krl.modulation.ShiftTracker`.
    """
    pattern: WavePattern
    profiles: WaveProfiles
    tracker: modulation.ShiftTracker
    reference: np.ndarray
    kappa_1: float = 0.1
    contact_rate: Optional[float] = None
    reports: List[EntropyReport] = dataclass_field(default_factory=list)

    def sample(self, field: DistributionField) -> EntropyReport:
        space = field.space
        shifts = self.tracker.state
        composite = modulation.assemble_composite(
            self.pattern, self.profiles, shifts, field.time, space)
        weights = modulation.weight(composite, self.pattern)
        cut = None
        if len(self.pattern.shock_families()) == 2:
            cut = modulation.cutoffs(shifts, field.time, space)
        report = entropy_ledger(field, composite, weights, cut, self.pattern,
                                self.profiles, self.reference, self.kappa_1,
                                self.contact_rate)
        self.reports.append(report)
        return report

    def __call__(self, info: "StepInfo") -> None:
        self.sample(info.field)

    def rows(self) -> List[Dict[str, float]]:
        return [report.as_row() for report in self.reports]


def velocity_reference(pattern: WavePattern, velocity: VelocityGrid) -> np.ndarray:
    """``M_#`` of a pattern: ``M[(v_+, 0, 2 theta_max)]``."""
    theta_max = max(state.theta for state in pattern.states)
    return macromicro.global_maxwellian(pattern.plus.v, theta_max, velocity)
