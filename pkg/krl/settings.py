"""
Configuration schemas of the lab and the conversion of a loaded
configuration into the dataclasses the solvers consume.

Every key lives in the ``krl`` namespace, grouped by section:

.. code-block:: ini

    [pattern]
    kind = single3
    delta3 = 0.05

    [experiment]
    kappa = 0.04, 0.02, 0.01
    mode = well_prepared

    [grid]
    n_cells = 400
    n_velocity = 16

Example
-------

.. code-block:: python

    from krl import settings

    settings.load_configuration('sweep.ini', ['grid.n_cells=200'])
    experiment = settings.build_experiment()
"""
import logging
import os
from typing import Any
from typing import Dict
from typing import Optional
from typing import Sequence

from krl import config
from krl import errors
from krl import loader
from krl import schema
from krl.gas import FluidState
from krl.grids import SpatialGrid
from krl.harness import ExperimentConfig
from krl.kinetic import SolverConfig
from krl.profiles import Transport
from krl.riemann import RAREFACTION
from krl.riemann import SHOCK
from krl.riemann import WavePattern
from krl.riemann import construct_pattern
from krl.riemann import solve_riemann


log = logging.getLogger(__name__)

NAMESPACE = 'krl'

THREADS_VARIABLE = 'KRL_THREADS'


class GridSchema(schema.Schema):

    namespace = NAMESPACE
    config_path = 'grid'

    x_left = schema.float(default=-2.0, help="Left end of the mass coordinate")
    x_right = schema.float(default=2.0, help="Right end of the mass coordinate")
    n_cells = schema.int(default=400, help="Number of spatial cells")
    n_velocity = schema.int(default=16, help="Velocity nodes per axis")
    velocity_radius = schema.float(
        default=0.0,
        help="Half width of the velocity box, 0 picks it from the states")


class SolverSchema(schema.Schema):

    namespace = NAMESPACE
    config_path = 'solver'

    cfl = schema.positive(default=0.4, help="CFL number of the transport step")
    end_time = schema.positive(default=0.5, help="Final macroscopic time")
    boundary = schema.boundary(default='fixed', help="fixed or periodic")
    collision_scale = schema.positive(
        default=1.0, help="Constant factor of the BGK collision frequency")
    strang = schema.bool(default=False, help="Use Strang splitting")
    stride = schema.int(default=10, help="Observer and progress stride in steps")
    dt = schema.float(default=0.0, help="Fixed time step, 0 for the CFL step")
    max_steps = schema.int(default=1000000, help="Step limit of one run")
    boundary_cells = schema.int(
        default=4, help="Cells watched next to each boundary")
    boundary_tolerance = schema.float(
        default=1e-6, help="Allowed deviation of the boundary cells, 0 disables")
    dump_dir = schema.string(default='', help="Directory for failure dumps")
    snapshots = schema.bool(default=False, help="Write snapshots at the stride")


class TransportSchema(schema.Schema):

    namespace = NAMESPACE
    config_path = 'transport'

    bgk = schema.bool(
        default=True, help="Use the coefficients induced by the BGK operator")
    mu0 = schema.positive(
        default=1.0, help="Viscosity prefactor mu(theta) = mu0 sqrt(theta)")
    gamma = schema.positive(
        default=2.5, help="Ratio of heat conductivity to viscosity")


class PatternSchema(schema.Schema):

    namespace = NAMESPACE
    config_path = 'pattern'

    kind = schema.pattern(default='single3', help="scs, rcs or single3")
    v_plus = schema.positive(default=1.0, help="Specific volume of the right state")
    u_plus = schema.float(default=0.0, help="Velocity of the right state")
    theta_plus = schema.positive(default=1.0, help="Temperature of the right state")
    delta1 = schema.float(default=0.04, help="Strength of the 1-wave")
    delta_c = schema.float(default=0.04, help="Strength of the contact")
    delta3 = schema.float(default=0.05, help="Strength of the 3-wave")
    minus = schema.list_of_float(
        default=(), help="Left state v, u1, theta; overrides the strengths")
    plus = schema.list_of_float(
        default=(), help="Right state v, u1, theta; used with minus")


class ExperimentSchema(schema.Schema):

    namespace = NAMESPACE
    config_path = 'experiment'

    kappa = schema.kappa_list(
        default=(0.04, 0.02, 0.01), help="Knudsen numbers, strictly decreasing")
    mode = schema.mode(default='well_prepared', help="sharp or well_prepared")
    out = schema.string(default='out', help="Output directory")
    diagnostics = schema.bool(default=True, help="Record the entropy ledger")
    kappa_1 = schema.positive(
        default=0.1, help="Weight of the microscopic energy in E0")
    profile_nodes = schema.int(default=4000, help="Nodes of a shock profile table")


class ToleranceSchema(schema.Schema):

    namespace = NAMESPACE
    config_path = 'tolerance'

    riemann = schema.positive(default=1e-12, help="Riemann solver tolerance")
    max_strength = schema.positive(
        default=0.3, help="Largest total wave strength accepted")
    smallness = schema.positive(
        default=0.3, help="Sup norm of the perturbation considered small")
    monotonicity = schema.float(default=0.0, help="Slack of the profile sign check")


class LoggingSchema(schema.Schema):

    namespace = NAMESPACE
    config_path = 'logging'

    level = schema.log_level(default='INFO', help="Level of the root logger")


grid_config         = GridSchema()
solver_config       = SolverSchema()
transport_config    = TransportSchema()
pattern_config      = PatternSchema()
experiment_config   = ExperimentSchema()
tolerance_config    = ToleranceSchema()
logging_config      = LoggingSchema()


def parse_state(values: Sequence[float], name: str) -> FluidState:
    if len(values) != 3:
        raise errors.ConfigurationError(
            f"pattern.{name} needs three values v, u1, theta: {list(values)}")
    try:
        return FluidState(*values).check()
    except errors.StateError as e:
        raise errors.ConfigurationError(f"pattern.{name}: {e}")


def build_pattern() -> WavePattern:
    """The wave pattern described by the ``pattern`` section, solved from
    end states when ``minus`` and ``plus`` are given, otherwise constructed
    from the strengths.
    """
    section = pattern_config
    if section.minus:
        plus = section.plus or (section.v_plus, section.u_plus, section.theta_plus)
        pattern = solve_riemann(parse_state(section.minus, 'minus'),
                                parse_state(plus, 'plus'),
                                tol=tolerance_config.riemann)
    else:
        plus_state = parse_state(
            (section.v_plus, section.u_plus, section.theta_plus), 'plus')
        if section.kind == 'single3':
            pattern = construct_pattern(plus_state, 0.0, 0.0, section.delta3)
        else:
            first = SHOCK if section.kind == 'scs' else RAREFACTION
            pattern = construct_pattern(plus_state, section.delta1, section.delta_c,
                                        section.delta3, first_wave=first)
    if pattern.strength > tolerance_config.max_strength:
        raise errors.ConfigurationError(
            f"Total strength {pattern.strength:.4g} exceeds "
            f"tolerance.max_strength={tolerance_config.max_strength}")
    return pattern


def build_transport() -> Transport:
    if transport_config.bgk:
        return Transport.for_bgk()
    return Transport(transport_config.mu0, transport_config.gamma).check()


def build_space() -> SpatialGrid:
    return SpatialGrid(grid_config.x_left, grid_config.x_right, grid_config.n_cells)


def build_solver_config(kappa: float, out_dir: Optional[str] = None) -> SolverConfig:
    section = solver_config
    snapshot_dir = None
    if section.snapshots and out_dir:
        snapshot_dir = os.path.join(out_dir, 'snapshots')
    return SolverConfig(
        kappa=kappa,
        cfl=section.cfl,
        end_time=section.end_time,
        boundary=section.boundary,
        collision_scale=section.collision_scale,
        strang=section.strang,
        stride=section.stride,
        dt=section.dt or None,
        max_steps=section.max_steps,
        boundary_cells=section.boundary_cells,
        boundary_tolerance=section.boundary_tolerance or None,
        dump_dir=section.dump_dir or None,
        snapshot_dir=snapshot_dir,
    ).check()


def thread_count() -> int:
    """Sweep parallelism: ``KRL_THREADS`` or the cpu count."""
    value = os.environ.get(THREADS_VARIABLE)
    if not value:
        return os.cpu_count() or 1
    try:
        count = int(value)
    except ValueError:
        raise errors.ConfigurationError(
            f"{THREADS_VARIABLE} is not an integer: {value}")
    if count < 1:
        raise errors.ConfigurationError(
            f"{THREADS_VARIABLE} must be positive: {value}")
    return count


def build_experiment() -> ExperimentConfig:
    section = experiment_config
    kappas = list(section.kappa)
    out_dir = section.out
    return ExperimentConfig(
        pattern=build_pattern(),
        kappas=kappas,
        space=build_space(),
        n_velocity=grid_config.n_velocity,
        velocity_radius=grid_config.velocity_radius or None,
        solver=build_solver_config(kappas[0], out_dir),
        mode=section.mode,
        out_dir=out_dir,
        transport=build_transport(),
        kappa_1=section.kappa_1,
        smallness=tolerance_config.smallness,
        diagnostics=section.diagnostics,
        profile_nodes=section.profile_nodes,
        threads=thread_count(),
    ).check()


def _clear() -> None:
    config.get_namespace(NAMESPACE).clear()
    config.reload(NAMESPACE)


def load_configuration(
    path: Optional[str] = None,
    overrides: Sequence[str] = (),
) -> Dict[str, Any]:
    """Replace the ``krl`` namespace with the contents of ``path`` (ini, or
    yaml by extension) followed by ``key=value`` overrides, then validate
    every key.

    :raises ConfigurationError: on unknown keys, listing the valid ones,
        and on values failing validation
    """
    _clear()
    data: Dict[str, Any] = {}
    if path:
        if path.endswith(('.yaml', '.yml')):
            data.update(loader.YamlConfiguration(
                path, namespace=NAMESPACE, error_on_unknown=True))
        else:
            data.update(loader.INIConfiguration(
                path, namespace=NAMESPACE, error_on_unknown=True))
    data.update(loader.ListConfiguration(
        list(overrides), namespace=NAMESPACE, error_on_unknown=True))
    config.reload(NAMESPACE)
    config.validate(NAMESPACE)
    log.debug("Loaded %d configuration keys from %s",
              len(data), path or '<defaults>')
    return data


def effective_configuration() -> str:
    """The validated value of every key, in the ini format."""
    data: Dict[str, Any] = {}
    for section in (grid_config, solver_config, transport_config, pattern_config,
                    experiment_config, tolerance_config, logging_config):
        for key, value in section.as_dict().items():
            data[f"{section.config_path}.{key}"] = value
    data["logging.level"] = logging.getLevelName(data["logging.level"])
    return loader.serialize_ini(data)
