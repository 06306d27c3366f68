"""
Time integration of the Lagrangian BGK equation

.. math::

    f_t + \\frac{\\xi_1 - u_1}{v} f_x = \\nu (M[U_f] - f),\\qquad
    \\nu = c_\\nu \\frac{\\rho\\sqrt{\\theta}}{\\kappa}.

The transport step works on ``g = v f``, which satisfies the conservation
law ``g_t + ((xi_1 - u_1) f)_x = 0``. Every cell interface carries one
advection velocity ``u*`` chosen so that the upwind flux of ``g`` has zero
mass, ``sum_k w (xi_k - u*) f_up = 0``. With this choice the volume update
``v_t = u*_x`` is exact, the zeroth moment of ``g`` stays one in every
cell, and momentum, energy and the entropy ``sum v f ln f`` change only
through the boundary fluxes.

The relaxation step is the exact exponential
``f <- M + (f - M) exp(-nu dt)`` toward the moment corrected discrete
Maxwellian of the cell, which preserves the moments and decreases the
entropy.

Example
-------

.. code-block:: python

    from krl import kinetic

    config = kinetic.SolverConfig(kappa=0.01, end_time=0.5)
    trajectory = kinetic.run(initial, config, boundary=(minus, plus))
    print(trajectory.ledger.drift())
"""
import logging
import math
import os
import tempfile
from dataclasses import dataclass
from dataclasses import field as dataclass_field
from typing import Any
from typing import Callable
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np
from scipy import special

from krl import errors
from krl import grids
from krl import macromicro
from krl import modulation
from krl.gas import FluidState
from krl.grids import DistributionField
from krl.grids import FluidField
from krl.grids import SpatialGrid
from krl.grids import VelocityGrid
from krl.profiles import WaveFields
from krl.riemann import WavePattern


log = logging.getLogger(__name__)

FIXED = 'fixed'
PERIODIC = 'periodic'

SHARP = 'sharp'
WELL_PREPARED = 'well_prepared'


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of a kinetic run.

    ``dt`` forces a fixed step, which is rejected when it exceeds the CFL
    bound. ``boundary_tolerance`` is the largest relative moment deviation
    of the outermost ``boundary_cells`` cells from the far field states
    before the run is aborted, ``None`` disables the check.
    """
    kappa: float
    cfl: float = 0.4
    end_time: float = 0.5
    boundary: str = FIXED
    collision_scale: float = 1.0
    strang: bool = False
    stride: int = 10
    dt: Optional[float] = None
    max_steps: int = 1000000
    boundary_cells: int = 4
    boundary_tolerance: Optional[float] = 1e-6
    dump_dir: Optional[str] = None
    snapshot_dir: Optional[str] = None

    def check(self) -> "SolverConfig":
        if not self.kappa > 0:
            raise errors.ConfigurationError(f"kappa must be positive: {self.kappa}")
        if not 0 < self.cfl <= 1:
            raise errors.ConfigurationError(
                f"CFL number must be in (0, 1]: {self.cfl}")
        if self.boundary not in (FIXED, PERIODIC):
            raise errors.ConfigurationError(
                f"Unknown boundary mode: {self.boundary}")
        if self.stride < 1:
            raise errors.ConfigurationError(
                f"Observer stride must be positive: {self.stride}")
        if not self.collision_scale > 0:
            raise errors.ConfigurationError(
                f"Collision scale must be positive: {self.collision_scale}")
        return self


class Boundary:
    """Ghost cells of a run: the discrete far field Maxwellians for fixed
    boundaries, the opposite end cell for periodic ones.
    """

    def __init__(
        self,
        mode: str,
        velocity: VelocityGrid,
        states: Optional[Tuple[FluidState, FluidState]] = None,
    ) -> None:
        self.mode = mode
        self.states = states
        if mode == FIXED:
            if states is None:
                raise errors.ConfigurationError(
                    "Fixed boundaries need far field states")
            left, right = states
            self.ghost_values = (macromicro.discrete_maxwellian(left, velocity),
                                 macromicro.discrete_maxwellian(right, velocity))

    def extend(self, values: np.ndarray) -> np.ndarray:
        """Cells with one ghost on each side."""
        if self.mode == PERIODIC:
            return np.concatenate([values[-1:], values, values[:1]])
        return np.concatenate([self.ghost_values[0][None], values,
                               self.ghost_values[1][None]])


def _level_sums(values: np.ndarray, grid: VelocityGrid) -> np.ndarray:
    weighted = values * grid.weights
    return weighted.reshape(len(values), grid.n_per_axis, -1).sum(axis=2)


def interface_velocity(
    left: np.ndarray,
    right: np.ndarray,
    grid: VelocityGrid,
) -> np.ndarray:
    """The velocity ``u*`` of each interface for which the upwind flux
    ``sum_k w (xi_k - u*) f_up`` vanishes, ``f_up`` being ``left`` where
    ``xi_k > u*`` and ``right`` otherwise.

    The flux is piecewise linear and decreasing in ``u*`` with breaks at
    the levels of ``xi_1``, so the root is found exactly among the
    candidates of every break interval.
    """
    levels = grid.axes[0]
    a_left = _level_sums(left, grid)
    a_right = _level_sums(right, grid)
    zeros = np.zeros((len(left), 1))

    def prefix(x: np.ndarray) -> np.ndarray:
        return np.concatenate([zeros, np.cumsum(x, axis=1)], axis=1)

    def suffix(x: np.ndarray) -> np.ndarray:
        reversed_sum = np.cumsum(x[:, ::-1], axis=1)[:, ::-1]
        return np.concatenate([reversed_sum, zeros], axis=1)

    mass = prefix(a_right) + suffix(a_left)
    momentum = prefix(levels * a_right) + suffix(levels * a_left)
    candidates = momentum / mass
    slack = 1e-12 * (grid.radius + np.max(np.abs(levels)))
    lower = np.concatenate([[-np.inf], levels]) - slack
    upper = np.concatenate([levels, [np.inf]]) + slack
    valid = (candidates >= lower) & (candidates <= upper)
    if not np.all(np.any(valid, axis=1)):
        raise errors.SolverError("No zero mass flux interface velocity found")
    choice = np.argmax(valid, axis=1)
    return candidates[np.arange(len(left)), choice]


def upwind_flux(
    left: np.ndarray,
    right: np.ndarray,
    u_star: np.ndarray,
    grid: VelocityGrid,
) -> Tuple[np.ndarray, np.ndarray]:
    """Flux ``(xi_1 - u*) f_up`` of every node and the upwind values."""
    relative = grid.xi1[None, :] - u_star[:, None]
    upwind = np.where(relative > 0, left, right)
    return relative * upwind, upwind


@dataclass
class StepInfo:
    """What observers see after a step. Arrays are read only."""
    step: int
    time: float
    dt: float
    field: DistributionField
    previous: FluidField
    fluid: FluidField


@dataclass
class TransportResult:
    values: np.ndarray
    v: np.ndarray
    boundary_flux: np.ndarray
    entropy_inflow: float


def _totals(
    values: np.ndarray,
    v: np.ndarray,
    dx: float,
    grid: VelocityGrid,
) -> np.ndarray:
    """Total volume, momentum (3) and energy of a state."""
    g = values * v[:, None]
    phi = macromicro.collision_invariants(grid)
    moments = (g * grid.weights) @ phi
    return np.concatenate([[np.sum(v)], np.sum(moments[:, 1:], axis=0)]) * dx


def entropy(
    values: np.ndarray,
    v: np.ndarray,
    dx: float,
    grid: VelocityGrid,
) -> float:
    """``H = sum_j dx v_j sum_k w f ln f``."""
    return float(np.sum(v * macromicro.discrete_entropy(values, grid)) * dx)


class ConservationLedger:
    """Totals of volume, momentum and energy with the accumulated
    boundary inflow, and the entropy with its boundary flux.
    """

    def __init__(self, totals: np.ndarray, entropy_value: float) -> None:
        self.initial        = totals.copy()
        self.current        = totals.copy()
        self.inflow         = np.zeros_like(totals)
        self.entropy        = [entropy_value]
        self.entropy_inflow = 0.0
        self.production: List[float] = []

    def record(self, totals: np.ndarray, inflow: np.ndarray, entropy_value: float,
               entropy_inflow: float) -> None:
        self.current = totals
        self.inflow = self.inflow + inflow
        self.production.append(entropy_value - self.entropy[-1] - entropy_inflow)
        self.entropy.append(entropy_value)
        self.entropy_inflow += entropy_inflow

    def drift(self) -> np.ndarray:
        """Relative conservation error of each total."""
        scale = np.maximum(np.abs(self.initial), 1.0)
        return (self.current - self.initial - self.inflow) / scale

    @property
    def mass_drift(self) -> float:
        return float(self.drift()[0])

    def max_production(self) -> float:
        """Largest entropy change per step not explained by boundary flux."""
        return max(self.production) if self.production else 0.0


class KineticSolver:
    """Stepper for one run. Holds the boundary, the ledger and the dump
    logic; the arithmetic lives in the module level functions.
    """

    def __init__(
        self,
        config: SolverConfig,
        space: SpatialGrid,
        velocity: VelocityGrid,
        boundary_states: Optional[Tuple[FluidState, FluidState]] = None,
    ) -> None:
        self.config     = config.check()
        self.space      = space
        self.velocity   = velocity
        self.boundary   = Boundary(config.boundary, velocity, boundary_states)

    def dump(self, field: DistributionField) -> str:
        directory = self.config.dump_dir or tempfile.gettempdir()
        os.makedirs(directory, exist_ok=True)
        path = os.path.join(directory, f"krl-dump-t{field.time:.9g}.bin")
        grids.write_snapshot(path, field)
        return path

    def fail(self, msg: str, field: DistributionField) -> errors.SolverError:
        path = self.dump(field)
        log.error("%s at t=%s, state dumped to %s", msg, field.time, path)
        return errors.SolverError(f"{msg} at t={field.time}", path)

    def volumes(self, field: DistributionField) -> np.ndarray:
        density = field.values @ self.velocity.weights
        if np.any(density <= 0):
            raise self.fail("Negative density", field)
        return 1.0 / density

    def max_dt(self, values: np.ndarray, v: np.ndarray) -> Tuple[float, np.ndarray]:
        ext = self.boundary.extend(values)
        u_star = interface_velocity(ext[:-1], ext[1:], self.velocity)
        speed = np.max(np.abs(self.velocity.axes[0][:, None] - u_star[None, :]))
        return self.config.cfl * self.space.dx * float(np.min(v)) / speed, u_star

    def transport(self, values: np.ndarray, v: np.ndarray, u_star: np.ndarray,
                  dt: float, field: DistributionField) -> TransportResult:
        grid = self.velocity
        ext = self.boundary.extend(values)
        flux, upwind = upwind_flux(ext[:-1], ext[1:], u_star, grid)
        lam = dt / self.space.dx
        g = values * v[:, None] - lam * (flux[1:] - flux[:-1])
        v_new = v + lam * (u_star[1:] - u_star[:-1])
        if np.any(v_new <= 0):
            raise self.fail("Non-positive specific volume after transport", field)
        if np.min(g) < -1e-13 * np.max(g):
            raise self.fail("Negative distribution after transport", field)
        g = np.maximum(g, 0.0)

        phi = macromicro.collision_invariants(grid)
        through = (flux * grid.weights) @ phi
        # inflow of volume, momentum and energy through both ends
        inflow = np.concatenate([[u_star[-1] - u_star[0]],
                                 through[0, 1:] - through[-1, 1:]]) * dt
        entropy_flux = (flux * special.xlogy(upwind, upwind)) @ grid.weights
        entropy_inflow = float(entropy_flux[0] - entropy_flux[-1]) * dt
        if self.boundary.mode == PERIODIC:
            inflow = np.zeros_like(inflow)
            entropy_inflow = 0.0
        return TransportResult(g / v_new[:, None], v_new, inflow, entropy_inflow)

    def relax(self, values: np.ndarray, dt: float) -> np.ndarray:
        fluid = grids.fluid_from_moments(*grids.moments(values, self.velocity))
        maxwellian = macromicro.discrete_maxwellian_field(fluid, self.velocity)
        nu = self.config.collision_scale * macromicro.collision_frequency(
            fluid.rho, fluid.theta, self.config.kappa)
        decay = np.exp(-nu * dt)[:, None]
        return maxwellian + (values - maxwellian) * decay

    def check_boundary(self, field: DistributionField, fluid: FluidField) -> None:
        tolerance = self.config.boundary_tolerance
        if self.boundary.mode != FIXED or tolerance is None:
            return
        n = self.config.boundary_cells
        assert self.boundary.states is not None
        for cells, state in ((slice(0, n), self.boundary.states[0]),
                             (slice(-n, None), self.boundary.states[1])):
            deviation = np.max(np.abs(np.column_stack(
                [fluid.v[cells], fluid.u1[cells], fluid.theta[cells]])
                - state.as_array()) / (1.0 + np.abs(state.as_array())))
            if deviation > tolerance:
                raise self.fail(
                    f"Wave reached the boundary (deviation {deviation:.3e})", field)

    def step(self, field: DistributionField, until: Optional[float] = None,
             ) -> Tuple[DistributionField, TransportResult]:
        """One step of length ``config.dt`` or the CFL bound, shortened to
        end at ``until``.
        """
        values = field.values
        v = self.volumes(field)
        dt_max, u_star = self.max_dt(values, v)
        dt = self.config.dt or dt_max
        if dt > dt_max * (1.0 + 1e-12):
            raise self.fail(
                f"CFL violation: dt={dt:.6g} exceeds {dt_max:.6g}", field)
        if until is not None:
            dt = min(dt, until - field.time)
        if self.config.strang:
            values = self.relax(values, 0.5 * dt)
            v = self.volumes(field.replace(values, field.time))
            _, u_star = self.max_dt(values, v)
        moved = self.transport(values, v, u_star, dt, field)
        values = self.relax(moved.values, 0.5 * dt if self.config.strang else dt)
        return field.replace(values, field.time + dt), moved


def step(field: DistributionField, config: SolverConfig,
         boundary_states: Optional[Tuple[FluidState, FluidState]] = None,
         ) -> DistributionField:
    """Advance ``field`` by one CFL limited step."""
    solver = KineticSolver(config, field.space, field.velocity, boundary_states)
    return solver.step(field)[0]


Observer = Callable[[StepInfo], Any]


@dataclass
class Trajectory:
    """Handle on a finished run."""
    final: DistributionField
    ledger: ConservationLedger
    times: List[float] = dataclass_field(default_factory=list)
    steps: int = 0
    snapshots: List[str] = dataclass_field(default_factory=list)


def _read_only(field: DistributionField) -> DistributionField:
    values = field.values.view()
    values.flags.writeable = False
    return DistributionField(values, field.space, field.velocity, field.time)


def _call_observer(observer: Observer, info: StepInfo) -> None:
    try:
        observer(info)
    except errors.SeparationError:
        raise
    except Exception as e:
        name = getattr(observer, '__name__', type(observer).__name__)
        raise errors.ObserverError(
            f"Observer {name} failed at step {info.step}, t={info.time}: {e}") from e


def run(
    initial: DistributionField,
    config: SolverConfig,
    boundary: Optional[Tuple[FluidState, FluidState]] = None,
    observers: Sequence[Observer] = (),
) -> Trajectory:
    """Advance ``initial`` to ``config.end_time``.

    Observers are called after every ``stride`` steps (their own
    ``stride`` attribute, if any, overrides the configured one) and after
    the last step.
    """
    solver = KineticSolver(config, initial.space, initial.velocity, boundary)
    field = initial
    dx = initial.space.dx
    v = solver.volumes(field)
    ledger = ConservationLedger(_totals(field.values, v, dx, field.velocity),
                                entropy(field.values, v, dx, field.velocity))
    trajectory = Trajectory(initial, ledger, [initial.time])
    fluid = field.fluid()
    n = 0
    while field.time < config.end_time * (1.0 - 1e-14):
        if n >= config.max_steps:
            raise solver.fail(f"Step limit {config.max_steps} reached", field)
        previous = fluid
        start = field.time
        field, moved = solver.step(field, config.end_time)
        dt = field.time - start
        n += 1
        v = solver.volumes(field)
        ledger.record(_totals(field.values, v, dx, field.velocity),
                      moved.boundary_flux,
                      entropy(field.values, v, dx, field.velocity),
                      moved.entropy_inflow)
        fluid = field.fluid()
        solver.check_boundary(field, fluid)
        trajectory.times.append(field.time)

        last = field.time >= config.end_time * (1.0 - 1e-14)
        info = StepInfo(n, field.time, dt, _read_only(field), previous, fluid)
        for observer in observers:
            stride = getattr(observer, 'stride', config.stride)
            if n % stride == 0 or last:
                _call_observer(observer, info)
        if n % config.stride == 0 or last:
            log.info("t=%.17g dt=%.17g mass_drift=%.17g",
                     field.time, dt, ledger.mass_drift)
            if config.snapshot_dir:
                os.makedirs(config.snapshot_dir, exist_ok=True)
                path = os.path.join(config.snapshot_dir, f"snapshot-{n:06d}.bin")
                grids.write_snapshot(path, field)
                trajectory.snapshots.append(path)

    trajectory.final = field
    trajectory.steps = n
    log.debug("Run finished after %d steps, drift %s", n, ledger.drift())
    return trajectory


# --------------------------------------------------------------------------
# Initial data


def maxwellian_of_fields(fields: WaveFields, velocity: VelocityGrid) -> np.ndarray:
    return macromicro.wave_maxwellian(fields, velocity)


def riemann_fields(pattern: WavePattern, space: SpatialGrid) -> WaveFields:
    """The Riemann data ``U_0^E``: ``U_-`` left of the origin, ``U_+``
    right of it.
    """
    x = space.centers
    left = x < 0
    values = np.where(left[:, None], pattern.minus.as_array(),
                      pattern.plus.as_array())
    zeros = np.zeros_like(x)
    return WaveFields(values[:, 0], values[:, 1], values[:, 2],
                      zeros, zeros.copy(), zeros.copy())


@dataclass
class WellPreparedness:
    """Terms of the initial data functional in macroscopic variables:
    ``deviation = int |f0 - M[U_0^E]|^2 / M#``, ``first`` the weighted
    first derivative term and ``second`` the weighted second derivative
    term, so that ``macroscopic = deviation + kappa^2 first + kappa^4
    second`` and ``normalized = macroscopic / kappa``.
    """
    kappa: float
    deviation: float
    first: float
    second: float

    @property
    def macroscopic(self) -> float:
        return (self.deviation + self.kappa ** 2 * self.first
                + self.kappa ** 4 * self.second)

    @property
    def normalized(self) -> float:
        return self.macroscopic / self.kappa


def well_preparedness(
    field: DistributionField,
    pattern: WavePattern,
    kappa: float,
    reference: np.ndarray,
    collision_scale: float = 1.0,
) -> WellPreparedness:
    """Evaluate the initial data functional of ``field``, with the time
    derivative taken from the kinetic equation itself.
    """
    space, grid = field.space, field.velocity
    dx = space.dx
    riemann = maxwellian_of_fields(riemann_fields(pattern, space), grid)
    fluid = field.fluid()
    maxwellian = macromicro.discrete_maxwellian_field(fluid, grid)
    f = field.values
    f_x = np.gradient(f, dx, axis=0)
    nu = collision_scale * macromicro.collision_frequency(fluid.rho, fluid.theta,
                                                         kappa)
    f_t = (-(grid.xi1[None, :] - fluid.u1[:, None]) / fluid.v[:, None] * f_x
           + nu[:, None] * (maxwellian - f))
    f_xx = np.gradient(f_x, dx, axis=0)
    f_tx = np.gradient(f_t, dx, axis=0)

    def integral(values: np.ndarray) -> float:
        return float(np.sum(macromicro.norm_sq(values, reference, grid)) * dx)

    deviation = integral(f - riemann)
    first = integral(f_t) + integral(f_x)
    second = integral(f_xx) + integral(f_tx)
    return WellPreparedness(kappa, deviation, first, second)


@dataclass
class InitialData:
    field: DistributionField
    mode: str
    functional: WellPreparedness


def prepare_initial_data(
    pattern: WavePattern,
    profiles: modulation.WaveProfiles,
    space: SpatialGrid,
    velocity: VelocityGrid,
    mode: str = WELL_PREPARED,
    reference: Optional[np.ndarray] = None,
) -> InitialData:
    """Initial distribution for a run of ``pattern`` at the Knudsen number
    of ``profiles``.

    ``sharp`` takes the Maxwellian of the Riemann data in every cell.
    ``well_prepared`` takes the Maxwellian of the composite wave at ``t=0``
    plus the closed form BGK microscopic part of every shock layer.

    :raises ProfileError: if a wave of the pattern has no profile
    """
    kappa = profiles.kappa
    if reference is None:
        reference = macromicro.global_maxwellian(
            pattern.plus.v, max(s.theta for s in pattern.states), velocity)
    if mode == SHARP:
        values = maxwellian_of_fields(riemann_fields(pattern, space), velocity)
    elif mode == WELL_PREPARED:
        composite = modulation.assemble_composite(
            pattern, profiles, modulation.ShiftState.start(pattern), 0.0, space)
        values = maxwellian_of_fields(composite.fields, velocity)
        for shock in composite.shocks.values():
            values = values + macromicro.shock_micro_part(shock, kappa, velocity)
        negative = values < 0
        if np.any(negative):
            log.debug("Clipped %d negative tail values of the initial layer",
                      np.count_nonzero(negative))
            values = np.where(negative, 0.0, values)
    else:
        raise errors.ConfigurationError(f"Unknown initial data mode: {mode}")
    field = DistributionField(values, space, velocity, 0.0)
    functional = well_preparedness(field, pattern, kappa, reference)
    log.info("Initial data mode=%s kappa=%s functional=%.6g (normalized %.6g)",
             mode, kappa, functional.macroscopic, functional.normalized)
    return InitialData(field, mode, functional)


def micro_indicator(field: DistributionField, kappa: float,
                    collision_scale: float = 1.0) -> float:
    """``||Pi_1||`` summed over cells: the part of the microscopic
    distribution not explained by the Chapman-Enskog diffusion term.
    """
    fluid = field.fluid()
    grid = field.velocity
    maxwellian = macromicro.discrete_maxwellian_field(fluid, grid)
    micro = macromicro.micro_projection(field.values, maxwellian, grid)
    fields = macromicro.fields_from_fluid(fluid, field.space.dx)
    nu = collision_scale * macromicro.collision_frequency(fluid.rho, fluid.theta,
                                                         kappa)
    split = macromicro.chapman_enskog_split(micro, maxwellian, fields, nu, grid)
    remainder_sq = (split.remainder ** 2) @ grid.weights
    return float(math.sqrt(np.sum(remainder_sq) * field.space.dx))
