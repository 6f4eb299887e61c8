"""Exception hierarchy.

Each top-level category carries the process exit code used by the CLI.
"""


class HybridSeaError(Exception):
    exit_code = 1


class ConfigError(HybridSeaError):
    exit_code = 2


class DataError(HybridSeaError):
    exit_code = 3


class ModelFormatError(DataError):
    """Serialized model has the wrong version or a malformed payload."""


class SolverError(HybridSeaError):
    exit_code = 4

    def __init__(self, message, step=None, time=None):
        self.step = step
        self.time = time
        if step is not None:
            message = f"step {step} (t={time:.6g} s): {message}"
        super().__init__(message)

    def at(self, step, time):
        """Annotate in place with the step index and time; returns self."""
        self.step, self.time = step, time
        self.args = (f"step {step} (t={time:.6g} s): {self.args[0]}",)
        return self


class NonConvergenceError(SolverError):
    def __init__(self, message, residual_norm=float("nan"), **kw):
        self.residual_norm = residual_norm
        super().__init__(message, **kw)


class SingularJacobianError(SolverError):
    pass


class KinematicSingularityError(SolverError):
    pass


class TrainingError(HybridSeaError):
    exit_code = 5

    def __init__(self, message, epoch=None):
        self.epoch = epoch
        if epoch is not None:
            message = f"epoch {epoch}: {message}"
        super().__init__(message)


class DomainError(HybridSeaError, ValueError):
    """Argument outside the mathematical domain of a function."""

    exit_code = 2


class ContractError(HybridSeaError, ValueError):
    """Caller violated a shape or dimension contract."""

    exit_code = 3
