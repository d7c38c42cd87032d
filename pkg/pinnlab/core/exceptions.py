"""
Errors raised by the pipeline.

Every class carries the exit status `manage.py pinn` reports for it:
1 for invalid input or configuration, 2 for numerical failures and 3 when a
run finished but missed its acceptance threshold.
"""


class PinnError(Exception):
    exit_code = 1


class ConfigurationError(PinnError):
    pass


class UsageError(PinnError):
    pass


class DomainError(PinnError):
    pass


class ExportError(PinnError):
    def __init__(self, path, reason):
        self.path = path
        super().__init__(f"could not write {path}: {reason}")


class CheckpointError(PinnError):
    pass


class MalformedHeaderError(CheckpointError):
    pass


class ShapeMismatchError(CheckpointError):
    pass


class TruncatedPayloadError(CheckpointError):
    pass


class CorruptPayloadError(CheckpointError):
    pass


class NumericalError(PinnError):
    exit_code = 2


class SingularityError(NumericalError):
    pass


class TrainingAborted(NumericalError):
    def __init__(self, iteration, last_breakdown=None, reason='non-finite loss'):
        self.iteration = iteration
        self.last_breakdown = last_breakdown
        message = f"training aborted at iteration {iteration}: {reason}"
        if last_breakdown is not None:
            message += f" (last finite losses: {last_breakdown})"
        super().__init__(message)


class AcceptanceError(PinnError):
    exit_code = 3
