"""Exception hierarchy.

Two families matter to callers (and to the CLI exit codes): bad input or
configuration, and numerical failure (divergence, metric domain errors).
"""


class AeelmError(Exception):
    """Base class for all toolkit errors."""


class InputError(AeelmError, ValueError):
    """Malformed data or an invalid argument or configuration value."""


class NumericalError(AeelmError, ArithmeticError):
    """A computation left its valid numerical domain."""


class DomainError(NumericalError):
    """A metric is undefined for the given values (e.g. zero prediction)."""


class TrainingDivergedError(NumericalError):
    def __init__(self, epoch, loss):
        self.epoch = epoch
        self.loss = loss
        super().__init__(
            f"training diverged at epoch {epoch} (loss={loss!r}); "
            "try a smaller learning rate"
        )


class StageError(AeelmError):
    """Wraps any error raised inside a pipeline stage with the stage name."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")

    @property
    def numerical(self):
        return isinstance(self.cause, NumericalError)
