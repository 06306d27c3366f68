"""
Command line entry point.

.. code-block:: none

    krl riemann  --config pattern.ini
    krl profile  --config lab.ini --family 3 --delta 0.05
    krl simulate --config lab.ini --kappa 0.02 --mode sharp
    krl sweep    --config sweep.ini --out results
    krl diagnose --config sweep.ini --out results

Flags override keys of the configuration file, ``--set key=value`` overrides
any key. Failures print ``error[<category>]: <message>`` on stderr and exit
with the code of the category.
"""
import argparse
import glob
import logging
import os
import sys
from dataclasses import replace
from typing import Callable
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple
from typing import Type

import numpy as np

from krl import config
from krl import diagnostics
from krl import errors
from krl import harness
from krl import modulation
from krl import profiles
from krl import settings
from krl.grids import default_velocity_grid
from krl.grids import read_snapshot
from krl.riemann import construct_pattern
from krl.riemann import format_report
from krl.version import version


log = logging.getLogger(__name__)

PROFILE_COLUMNS = ('z', 'v', 'u1', 'theta', 'dv', 'du1', 'dtheta',
                   'd2v', 'd2u1', 'd2theta', 'mono_v', 'mono_u1', 'mono_theta')

EXIT_CODES: Tuple[Tuple[str, int, Tuple[Type[Exception], ...]], ...] = (
    ('config', 2, (errors.ConfigurationError, errors.ValidationError)),
    ('numerical', 3, (errors.RiemannError, errors.ProfileError,
                      errors.ConvergenceError, errors.StateError,
                      errors.GridError)),
    ('solver', 4, (errors.SolverError, errors.SeparationError)),
    ('diagnostics', 5, (errors.DiagnosticError,)),
)


def error_category(error: Exception) -> Tuple[str, int]:
    for name, code, types in EXIT_CODES:
        if isinstance(error, types):
            return name, code
    return 'other', 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='krl', description="Kinetic relaxation lab for BGK wave patterns")
    parser.add_argument('--version', action='version', version=version)
    parser.add_argument('--help-config', action='store_true',
                        help="Describe every configuration key and exit")
    commands = parser.add_subparsers(dest='command')

    def add_command(name: str, help_text: str) -> argparse.ArgumentParser:
        command = commands.add_parser(name, help=help_text)
        command.add_argument('--config', help="Configuration file (ini or yaml)")
        command.add_argument('--out', help="Output directory")
        command.add_argument('--set', action='append', default=[],
                             metavar='KEY=VALUE',
                             help="Override a configuration key")
        return command

    add_command('riemann', "Solve the configured Riemann problem")
    profile = add_command('profile', "Tabulate a viscous shock profile")
    profile.add_argument('--family', type=int, choices=(1, 3), default=3)
    profile.add_argument('--delta', type=float, help="Shock strength")
    for name in ('simulate', 'sweep', 'diagnose'):
        command = add_command(name, {
            'simulate': "Run the kinetic solver for one Knudsen number",
            'sweep': "Run a Knudsen number sweep and fit the error rate",
            'diagnose': "Check the artifacts of a previous sweep",
        }[name])
        command.add_argument('--kappa', help="Comma separated Knudsen numbers")
        command.add_argument('--pattern', choices=('scs', 'rcs', 'single3'))
        command.add_argument('--mode', choices=('sharp', 'well_prepared'))
    commands.choices['diagnose'].add_argument(
        '--snapshot', help="Evaluate the entropy ledger of a snapshot")
    return parser


def overrides_from_args(args: argparse.Namespace) -> List[str]:
    overrides = []
    for flag, key in (('out', 'experiment.out'), ('kappa', 'experiment.kappa'),
                      ('pattern', 'pattern.kind'), ('mode', 'experiment.mode')):
        value = getattr(args, flag, None)
        if value is not None:
            overrides.append(f"{key}={value}")
    return overrides + list(args.set)


def setup_logging() -> None:
    logging.basicConfig(
        level=settings.logging_config.level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def output_dir() -> str:
    out = settings.experiment_config.out
    os.makedirs(out, exist_ok=True)
    return out


def write_text(path: str, text: str) -> None:
    with open(path, 'w') as fh:
        fh.write(text)


def cmd_riemann(args: argparse.Namespace) -> int:
    report = format_report(settings.build_pattern())
    write_text(os.path.join(output_dir(), 'riemann.txt'), report)
    sys.stdout.write(report)
    return 0


def profile_rows(table: profiles.ProfileTable) -> np.ndarray:
    if table.family == 1:
        signs = np.array([-1.0, -1.0, 1.0])
    else:
        signs = np.array([1.0, -1.0, -1.0])
    monotone = (table.derivatives * signs > 0).astype(float)
    return np.column_stack([table.z, table.values, table.derivatives, table.second,
                            monotone])


def cmd_profile(args: argparse.Namespace) -> int:
    section = settings.pattern_config
    family = args.family
    if args.delta is not None:
        delta = args.delta
    else:
        delta = section.delta1 if family == 1 else section.delta3
    plus = settings.parse_state(
        (section.v_plus, section.u_plus, section.theta_plus), 'plus')
    pattern = construct_pattern(plus, delta if family == 1 else 0.0, 0.0,
                                delta if family == 3 else 0.0)
    left, right = pattern.shock_sides(family)
    table = profiles.solve_shock_profile(
        family, left, right, pattern.shock_speed(family), settings.build_transport(),
        n_nodes=settings.experiment_config.profile_nodes)
    path = os.path.join(output_dir(), f"profile-{family}.csv")
    harness.write_csv(path, PROFILE_COLUMNS, profile_rows(table))
    holds = profiles.monotonicity_holds(table)
    sys.stdout.write(f"family = {family}\ndelta = {delta!r}\n"
                     f"sigma = {table.sigma!r}\n"
                     f"residual = {profiles.profile_residual(table)!r}\n"
                     f"monotone = {str(holds).lower()}\n")
    if not holds:
        raise errors.DiagnosticError(f"Profile of family {family} is not monotone")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    experiment = settings.build_experiment()
    result = harness.run_experiment(experiment, experiment.kappas[0])
    sys.stdout.write(
        f"kappa = {result.kappa!r}\nlimit_error = {result.limit_error!r}\n"
        f"TV1 = {result.variation[0]!r}\nTV3 = {result.variation[1]!r}\n"
        f"steps = {result.steps}\nmass_drift = {result.mass_drift!r}\n")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    experiment = settings.build_experiment()
    write_text(os.path.join(output_dir(), 'config.ini'),
               settings.effective_configuration())
    result = harness.run_sweep(experiment)
    if result.fit is not None:
        sys.stdout.write(f"exponent = {result.fit.exponent!r}\n"
                         f"prefactor = {result.fit.prefactor!r}\n"
                         f"residual = {result.fit.residual!r}\n")
    if result.band is not None:
        sys.stdout.write(f"band = {result.band[0]!r}, {result.band[1]!r}\n")
    if result.failures:
        raise errors.SolverError(
            f"{len(result.failures)} of {len(result.kappas)} runs failed: "
            + '; '.join(f"kappa={k}: {msg}"
                        for k, msg in sorted(result.failures.items())))
    return 0


def check_run_dir(run_dir: str) -> List[str]:
    """Failed checks of the artifacts of one run."""
    problems = []
    header, shifts = harness.read_csv(os.path.join(run_dir, 'shifts.csv'))
    if len(shifts) >= 2:
        for family, column in ((1, 'X1'), (3, 'X3')):
            positions = shifts[:, header.index(column)]
            chain = diagnostics.bv_chain(shifts[:, 0], positions)
            if not chain.holds:
                problems.append(f"{run_dir}: BV chain of X{family} fails "
                                f"({chain.variation!r} > {chain.bound!r})")
    ledger_path = os.path.join(run_dir, 'diagnostics.csv')
    if os.path.exists(ledger_path):
        header, rows = harness.read_csv(ledger_path)
        for name in ('weighted_entropy', 'G1', 'G3', 'good', 'D_mac', 'D_mic',
                     'rem_norm', 'contact_norm'):
            column = rows[:, header.index(name)]
            if np.any(column < 0):
                problems.append(f"{run_dir}: {name} is negative at "
                                f"t={rows[np.argmax(column < 0), 0]!r}")
    return problems


def diagnose_snapshot(path: str) -> diagnostics.EntropyReport:
    experiment = settings.build_experiment()
    pattern, space = experiment.pattern, experiment.space
    kappa = experiment.kappas[0]
    velocity = default_velocity_grid(pattern.states, experiment.n_velocity,
                                     experiment.velocity_radius)
    field = read_snapshot(path, space, velocity)
    waves = modulation.build_profiles(pattern, kappa, experiment.transport,
                                      experiment.profile_nodes)
    shifts = modulation.ShiftState.start(pattern, field.time)
    run_dir = experiment.run_dir(kappa)
    if run_dir and os.path.exists(os.path.join(run_dir, 'shifts.csv')):
        _, rows = harness.read_csv(os.path.join(run_dir, 'shifts.csv'))
        history = modulation.ShiftHistory([tuple(row) for row in rows])
        shifts = replace(shifts, positions=history.positions_at(field.time))
    composite = modulation.assemble_composite(pattern, waves, shifts, field.time,
                                              space)
    weights = modulation.weight(composite, pattern)
    cut = None
    if len(pattern.shock_families()) == 2:
        cut = modulation.cutoffs(shifts, field.time, space)
    return diagnostics.entropy_ledger(
        field, composite, weights, cut, pattern, waves,
        diagnostics.velocity_reference(pattern, velocity), experiment.kappa_1)


def cmd_diagnose(args: argparse.Namespace) -> int:
    out = output_dir()
    if args.snapshot:
        row = diagnose_snapshot(args.snapshot).as_row()
        text = ''.join(f"{name} = {row[name]!r}\n"
                       for name in diagnostics.DIAGNOSTIC_COLUMNS)
        write_text(os.path.join(out, 'diagnose-snapshot.txt'), text)
        sys.stdout.write(text)
        return 0
    run_dirs = sorted(glob.glob(os.path.join(out, 'kappa-*')))
    if not run_dirs:
        raise errors.DiagnosticError(f"No run directories under {out}")
    problems = [problem for run_dir in run_dirs
                for problem in check_run_dir(run_dir)]
    report = ''.join(f"{problem}\n" for problem in problems) or "all checks passed\n"
    write_text(os.path.join(out, 'diagnose.txt'), report)
    sys.stdout.write(report)
    if problems:
        raise errors.DiagnosticError(f"{len(problems)} checks failed")
    return 0


COMMANDS: Dict[str, Callable[[argparse.Namespace], int]] = {
    'riemann': cmd_riemann,
    'profile': cmd_profile,
    'simulate': cmd_simulate,
    'sweep': cmd_sweep,
    'diagnose': cmd_diagnose,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.help_config:
        sys.stdout.write(config.view_help() + '\n')
        return 0
    if not args.command:
        parser.print_usage(sys.stderr)
        return 1
    try:
        settings.load_configuration(args.config, overrides_from_args(args))
        setup_logging()
        return COMMANDS[args.command](args)
    except Exception as e:
        category, code = error_category(e)
        log.debug("Command %s failed", args.command, exc_info=True)
        sys.stderr.write(f"error[{category}]: {e}\n")
        return code
