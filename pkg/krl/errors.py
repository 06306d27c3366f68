from typing import Any
from typing import List
from typing import Optional
from typing import Sequence


class ValidationError(Exception):
    """Thrown when a configuration value can not be coerced into the expected
    type by a validator.
    """
    pass


class ConfigurationError(Exception):
    """Thrown when there is an error loading configuration from a file or
    object, or when a configuration key is unknown.
    """
    pass


class GridError(Exception):
    """Thrown when a spatial or velocity grid is built with invalid
    parameters, or when fields defined on different grids are combined.
    """
    pass


class StateError(Exception):
    """Thrown when a fluid state is inadmissible (non-positive volume or
    temperature) or a distribution has corrupted moments.
    """
    pass


class RiemannError(Exception):
    """Thrown when a wave curve is evaluated on the wrong side, or the
    Riemann solver does not converge. Carries the residual history.
    """

    def __init__(
        self,
        msg: str,
        residuals: Optional[Sequence[float]] = None,
    ) -> None:
        super().__init__(msg)
        self.residuals: List[float] = list(residuals or [])


class ProfileError(Exception):
    """Thrown when a traveling wave or self-similar profile can not be
    constructed. Carries the trial parameters of the failed attempt.
    """

    def __init__(self, msg: str, **trial: Any) -> None:
        if trial:
            msg = "{} ({})".format(
                msg, ', '.join(f"{k}={v!r}" for k, v in sorted(trial.items())))
        super().__init__(msg)
        self.trial = trial


class ConvergenceError(Exception):
    """Thrown when the moment correction of a discrete Maxwellian fails."""
    pass


class SolverError(Exception):
    """Thrown when the kinetic time stepper aborts. `dump_path` names the
    snapshot written at the time of failure, if any.
    """

    def __init__(self, msg: str, dump_path: Optional[str] = None) -> None:
        if dump_path:
            msg = f"{msg} (state dumped to {dump_path})"
        super().__init__(msg)
        self.dump_path = dump_path


class ObserverError(SolverError):
    """Thrown when an observer fails, with the step and time it failed at."""
    pass


class SeparationError(Exception):
    """Thrown when the shock shifts are no longer well separated."""
    pass


class DiagnosticError(Exception):
    """Thrown when a diagnostic can not be evaluated, for example a fit
    window with too few points.
    """
    pass
