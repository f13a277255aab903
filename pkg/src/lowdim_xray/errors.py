"""Exception hierarchy shared by the library and the CLI.

Every error carries the process exit code the CLI reports for it.
"""


class LowdimError(Exception):
    """Base class for all lowdim-xray errors."""

    exit_code: int = 2


class ParseError(LowdimError, ValueError):
    """A data or configuration file could not be parsed."""


class ValidationError(LowdimError, ValueError):
    """Input violates a documented invariant."""


class RangeError(LowdimError, ValueError):
    """A value lies outside its permitted range."""


class DomainError(LowdimError, ValueError):
    """A function was evaluated outside its mathematical domain."""


class MissingTableError(LowdimError, KeyError):
    """An element attenuation table is not available."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "missing element table"


class UnsatisfiableRuleError(LowdimError, ValueError):
    """A K-edge selection rule cannot be met with the available elements."""


class DegenerateStatsError(LowdimError, ValueError):
    """Standardization statistics contain a zero standard deviation."""


class EmptySplitError(LowdimError, ValueError):
    """A dataset split would contain no rows."""


class ShapeError(LowdimError, ValueError):
    """Array dimensions do not match what the operation expects."""


class NumericalError(LowdimError, ArithmeticError):
    """A numerical routine failed (rank deficiency, non-convergence, non-finite values)."""


class StaleCacheError(LowdimError, RuntimeError):
    """A forward cache no longer matches the network parameters."""


class ZeroNormError(LowdimError, ZeroDivisionError):
    """A normalisation by a zero-norm reference vector was requested."""


class IncompatibleModelError(LowdimError, ValueError):
    """A model cannot be applied to the given data."""


class TrainingDivergenceError(LowdimError, ArithmeticError):
    """Training produced a non-finite loss."""

    exit_code = 3

    def __init__(self, message: str, epoch: int | None = None, batch: int | None = None) -> None:
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch


class MissingArtifactError(LowdimError, FileNotFoundError):
    """A dataset, model or report required by a command does not exist."""

    exit_code = 4
