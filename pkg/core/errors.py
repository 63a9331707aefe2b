"""
Error hierarchy shared by every stage.
Each class carries the process exit code the CLI reports for it.
"""


class MicroforgeError(Exception):
    exit_code = 1


class ConfigError(MicroforgeError):
    exit_code = 2


class DimensionError(ConfigError):
    pass


class DomainError(ConfigError):
    pass


class DivergenceError(MicroforgeError):
    """Numerical blow-up. `step` and `term` locate it when known."""
    exit_code = 3

    def __init__(self, message, step=None, term=None):
        self.step = step
        self.term = term
        where = []
        if step is not None:
            where.append(f"step {step}")
        if term is not None:
            where.append(f"term '{term}'")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class StateError(MicroforgeError):
    exit_code = 3


class MissingArtifactError(MicroforgeError):
    exit_code = 4


class CheckpointError(MicroforgeError):
    exit_code = 4


class UndefinedMetricError(MicroforgeError):
    pass


class UsageError(MicroforgeError):
    pass
