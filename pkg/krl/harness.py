"""
Experiment orchestration: one kinetic run per Knudsen number with the shift
tracker and the diagnostics attached, power law fits of the errors and the
CSV artifacts of a sweep.

Each run writes under ``<out>/kappa-<kappa>/``:

shifts.csv
    columns of :data:`krl.modulation.SHIFT_COLUMNS`
diagnostics.csv
    columns of :data:`krl.diagnostics.DIAGNOSTIC_COLUMNS`

and a sweep adds ``<out>/sweep.csv`` with one row per Knudsen number.

Example
-------

.. code-block:: python

    from krl import harness

    result = harness.run_sweep(experiment)
    print(result.fit.exponent)
"""
import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from dataclasses import field as dataclass_field
from dataclasses import replace
from typing import Dict
from typing import Iterable
from typing import List
from typing import NamedTuple
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np
from scipy import stats

from krl import diagnostics
from krl import errors
from krl import kinetic
from krl import modulation
from krl.grids import SpatialGrid
from krl.grids import default_velocity_grid
from krl.kinetic import SolverConfig
from krl.kinetic import WellPreparedness
from krl.profiles import Transport
from krl.profiles import fit_gaussian_tail
from krl.riemann import WavePattern


log = logging.getLogger(__name__)

SWEEP_COLUMNS = ('kappa', 'limit_error', 'TV1', 'TV3', 'plateau', 'shift_l1',
                 'initial_functional', 'steps', 'mass_drift', 'separated')

RUN_ERRORS = (errors.SolverError, errors.SeparationError, errors.DiagnosticError,
              errors.ProfileError, errors.ConvergenceError, errors.StateError)


@dataclass
class ExperimentConfig:
    pattern: WavePattern
    kappas: List[float]
    space: SpatialGrid
    solver: SolverConfig
    n_velocity: int = 16
    velocity_radius: Optional[float] = None
    mode: str = kinetic.WELL_PREPARED
    out_dir: Optional[str] = None
    transport: Transport = dataclass_field(default_factory=Transport.for_bgk)
    kappa_1: float = 0.1
    smallness: float = 0.3
    diagnostics: bool = True
    profile_nodes: int = 4000
    threads: int = 1

    def check(self) -> "ExperimentConfig":
        if not self.kappas:
            raise errors.ConfigurationError("Empty kappa list")
        if any(k <= 0 for k in self.kappas):
            raise errors.ConfigurationError(f"kappa must be positive: {self.kappas}")
        if any(b >= a for a, b in zip(self.kappas, self.kappas[1:])):
            raise errors.ConfigurationError(
                f"kappa list must be strictly decreasing: {self.kappas}")
        if self.mode not in (kinetic.SHARP, kinetic.WELL_PREPARED):
            raise errors.ConfigurationError(
                f"Unknown initial data mode: {self.mode}")
        if self.pattern.kind == 'unsupported':
            raise errors.ConfigurationError(
                "Patterns with a 3-rarefaction can not be run")
        if self.threads < 1:
            raise errors.ConfigurationError(f"Invalid thread count: {self.threads}")
        return self

    def run_dir(self, kappa: float) -> Optional[str]:
        if not self.out_dir:
            return None
        return os.path.join(self.out_dir, f"kappa-{kappa:.6g}")

    def solver_for(self, kappa: float) -> SolverConfig:
        snapshot_dir = None
        run_dir = self.run_dir(kappa)
        if self.solver.snapshot_dir and run_dir:
            snapshot_dir = os.path.join(run_dir, 'snapshots')
        return replace(self.solver, kappa=kappa, snapshot_dir=snapshot_dir).check()


@dataclass
class RunResult:
    kappa: float
    limit_error: float
    variation: Tuple[float, float]
    plateau: Optional[float]
    initial: WellPreparedness
    shifts: modulation.ShiftHistory
    reports: List[diagnostics.EntropyReport]
    steps: int
    mass_drift: float
    separated: bool
    small: bool
    tail: Optional[diagnostics.TailReport] = None

    def shift_series(self) -> np.ndarray:
        """Columns ``t, X1, X3``."""
        data = self.shifts.array()
        return data[:, [0, 1, 3]]


class PowerLaw(NamedTuple):
    exponent: float
    prefactor: float
    residual: float


def _log_data(
    xs: Sequence[float],
    ys: Sequence[float],
) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise errors.DiagnosticError("A power law fit needs two aligned samples")
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise errors.DiagnosticError(
            f"Power law data must be positive: {list(x)}, {list(y)}")
    return np.log(x), np.log(y)


def fit_power_law(xs: Sequence[float], ys: Sequence[float]) -> PowerLaw:
    """Least squares fit of ``y = C x^p`` in log-log variables. The residual
    is the largest deviation ``|log y - fit|``.
    """
    log_x, log_y = _log_data(xs, ys)
    regression = stats.linregress(log_x, log_y)
    fitted = regression.intercept + regression.slope * log_x
    return PowerLaw(float(regression.slope), float(math.exp(regression.intercept)),
                    float(np.max(np.abs(log_y - fitted))))


def confidence_band(xs: Sequence[float], ys: Sequence[float],
                    level: float = 0.95) -> Tuple[float, float]:
    """Student t interval of the fitted exponent, degenerate for two points."""
    log_x, log_y = _log_data(xs, ys)
    regression = stats.linregress(log_x, log_y)
    if log_x.size < 3:
        return float(regression.slope), float(regression.slope)
    width = stats.t.ppf(0.5 + 0.5 * level, log_x.size - 2) * regression.stderr
    return float(regression.slope - width), float(regression.slope + width)


def write_csv(
    path: str,
    columns: Sequence[str],
    rows: Iterable[Sequence[float]],
) -> None:
    """Header row then full precision values."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', newline='') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_number(value) for value in row])


def format_number(value: object) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(value)
    if isinstance(value, (float, np.floating)):
        return format(float(value), '.17g')
    return str(value)


def read_csv(path: str) -> Tuple[List[str], np.ndarray]:
    with open(path, newline='') as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(value) for value in row] for row in reader]
    return header, np.array(rows, dtype=float).reshape(-1, len(header))


def write_run(result: RunResult, run_dir: str) -> None:
    write_csv(os.path.join(run_dir, 'shifts.csv'), modulation.SHIFT_COLUMNS,
              result.shifts.rows)
    if result.reports:
        columns = diagnostics.DIAGNOSTIC_COLUMNS
        rows = (report.as_row() for report in result.reports)
        write_csv(os.path.join(run_dir, 'diagnostics.csv'), columns,
                  ([row[name] for name in columns] for row in rows))
    if result.tail is not None:
        write_csv(os.path.join(run_dir, 'tail.csv'), ('distance', 'norm'),
                  zip(result.tail.distance, result.tail.norms))


def _contact_rate(profiles: modulation.WaveProfiles) -> Optional[float]:
    if profiles.contact is None or profiles.contact.delta == 0:
        return None
    try:
        return fit_gaussian_tail(profiles.contact)
    except errors.DiagnosticError as e:
        log.warning("No Gaussian contact tail: %s", e)
        return None


def run_experiment(
    cfg: ExperimentConfig,
    kappa: float,
    limit_shifts: Optional[diagnostics.PositionFn] = None,
) -> RunResult:
    """One kinetic run at ``kappa`` with the shifts tracked along.

    The limit error is measured against the Riemann solution shifted by
    ``limit_shifts``, by default the shifts tracked in this run.
    """
    pattern = cfg.pattern
    space = cfg.space
    velocity = default_velocity_grid(pattern.states, cfg.n_velocity,
                                     cfg.velocity_radius)
    profiles = modulation.build_profiles(pattern, kappa, cfg.transport,
                                         cfg.profile_nodes)
    reference = diagnostics.velocity_reference(pattern, velocity)
    initial = kinetic.prepare_initial_data(pattern, profiles, space, velocity,
                                           cfg.mode, reference)

    tracker = modulation.ShiftTracker(pattern, profiles, space)
    if limit_shifts is None:
        limit_shifts = tracker.history.positions_at
    limit = diagnostics.LimitErrorObserver(pattern, limit_shifts)
    limit.add(initial.field)
    observers: List[kinetic.Observer] = [tracker, limit]
    ledger = None
    if cfg.diagnostics:
        ledger = diagnostics.DiagnosticsObserver(
            pattern, profiles, tracker, reference, cfg.kappa_1,
            _contact_rate(profiles))
        ledger.sample(initial.field)
        observers.append(ledger)

    solver = cfg.solver_for(kappa)
    boundary = None
    if solver.boundary == kinetic.FIXED:
        boundary = (pattern.minus, pattern.plus)
    trajectory = kinetic.run(initial.field, solver, boundary, observers)

    tail = None
    if pattern.kind == 'single3':
        tail = diagnostics.single_shock_pointwise(
            trajectory.final, pattern, tracker.state.position(3), kappa, reference)
    reports = ledger.reports if ledger is not None else []
    small = all(report.sup_norm <= cfg.smallness for report in reports)
    separated = bool(np.all(tracker.history.array()[:, -1] > 0)) \
        if len(pattern.shock_families()) == 2 else True
    if small and not separated:
        log.warning("Shifts lost separation at kappa=%s with a small perturbation",
                    kappa)

    result = RunResult(
        kappa=kappa,
        limit_error=limit.integral(),
        variation=tracker.state.variation,
        plateau=tail.plateau if tail is not None else None,
        initial=initial.functional,
        shifts=tracker.history,
        reports=reports,
        steps=trajectory.steps,
        mass_drift=trajectory.ledger.mass_drift,
        separated=separated,
        small=small,
        tail=tail,
    )
    run_dir = cfg.run_dir(kappa)
    if run_dir:
        write_run(result, run_dir)
    log.info("kappa=%s limit_error=%.6g TV=%s steps=%d",
             kappa, result.limit_error, result.variation, result.steps)
    return result


@dataclass
class SweepResult:
    kappas: List[float]
    runs: Dict[float, RunResult] = dataclass_field(default_factory=dict)
    failures: Dict[float, str] = dataclass_field(default_factory=dict)
    shift_distances: Dict[float, float] = dataclass_field(default_factory=dict)
    reference: Optional[float] = None
    fit: Optional[PowerLaw] = None
    band: Optional[Tuple[float, float]] = None

    @property
    def complete(self) -> bool:
        return not self.failures

    def column(self, name: str) -> List[float]:
        """Per kappa values aligned with :attr:`kappas`, ``nan`` for failed
        runs.
        """
        values = []
        for kappa in self.kappas:
            run = self.runs.get(kappa)
            values.append(math.nan if run is None else _sweep_row(run, self)[name])
        return values

    def rows(self) -> List[Tuple[float, ...]]:
        rows = []
        for kappa in self.kappas:
            run = self.runs.get(kappa)
            if run is None:
                rows.append((kappa,) + (math.nan,) * (len(SWEEP_COLUMNS) - 1))
                continue
            row = _sweep_row(run, self)
            rows.append(tuple(row[name] for name in SWEEP_COLUMNS))
        return rows


def _sweep_row(run: RunResult, result: SweepResult) -> Dict[str, float]:
    return {
        'kappa': run.kappa,
        'limit_error': run.limit_error,
        'TV1': run.variation[0],
        'TV3': run.variation[1],
        'plateau': math.nan if run.plateau is None else run.plateau,
        'shift_l1': result.shift_distances.get(run.kappa, math.nan),
        'initial_functional': run.initial.macroscopic,
        'steps': run.steps,
        'mass_drift': run.mass_drift,
        'separated': run.separated,
    }


def shift_distance(run: RunResult, reference: RunResult) -> float:
    """``sum_i ||X_i^kappa - X_i^ref||_{L^1(0, T)}``."""
    mine = run.shift_series()
    other = reference.shift_series()
    total = 0.0
    for column in (1, 2):
        def interpolate(t: np.ndarray, column: int = column) -> np.ndarray:
            return np.interp(t, other[:, 0], other[:, column])
        total += diagnostics.shift_l1_distance(mine[:, 0], mine[:, column],
                                               interpolate)
    return total


def run_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Run every Knudsen number of ``cfg``, the smallest first, then the
    others in parallel on up to ``cfg.threads`` threads.

    The shifts of the smallest successful Knudsen number are the limit
    shifts ``X0``: the limit errors and the L1 shift distances of every
    other run are measured against them.

    A failing run is recorded in :attr:`SweepResult.failures` and the sweep
    goes on. When the smallest Knudsen number fails the next one becomes the
    reference.

    :raises ConfigurationError: with fewer than three Knudsen numbers
    """
    cfg.check()
    if len(cfg.kappas) < 3:
        raise errors.ConfigurationError(
            f"A sweep needs at least three kappa values, got {cfg.kappas}")
    result = SweepResult(list(cfg.kappas))
    order = sorted(cfg.kappas)

    def attempt(kappa: float, *args: diagnostics.PositionFn) -> None:
        try:
            result.runs[kappa] = run_experiment(cfg, kappa, *args)
        except RUN_ERRORS as e:
            log.error("Run at kappa=%s failed: %s", kappa, e)
            result.failures[kappa] = f"{type(e).__name__}: {e}"

    rest = list(order)
    while rest and result.reference is None:
        kappa = rest.pop(0)
        attempt(kappa)
        if kappa in result.runs:
            result.reference = kappa

    if result.reference is not None:
        reference = result.runs[result.reference]
        limit_shifts = reference.shifts.positions_at
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            list(pool.map(lambda k: attempt(k, limit_shifts), rest))
        for kappa, run in result.runs.items():
            result.shift_distances[kappa] = shift_distance(run, reference)

    done = [k for k in cfg.kappas if k in result.runs]
    if len(done) >= 2:
        limit_errors = [result.runs[k].limit_error for k in done]
        try:
            result.fit = fit_power_law(done, limit_errors)
            result.band = confidence_band(done, limit_errors)
        except errors.DiagnosticError as e:
            log.warning("No power law fit: %s", e)

    if cfg.out_dir:
        write_csv(os.path.join(cfg.out_dir, 'sweep.csv'), SWEEP_COLUMNS,
                  result.rows())
        if result.failures:
            write_csv(os.path.join(cfg.out_dir, 'failures.csv'), ('kappa', 'error'),
                      sorted(result.failures.items()))
    return result


def variation_ratio(result: SweepResult, family: int) -> float:
    """``max / min`` of ``TV(X_i)`` over the successful runs."""
    index = 0 if family == 1 else 1
    values = [run.variation[index] for run in result.runs.values()]
    if not values or min(values) <= 0:
        return math.inf
    return max(values) / min(values)
