"""Exception types shared across the package."""


class LocalMartError(Exception):
    """Base class for all package errors."""


class ParameterError(LocalMartError):
    """A process or probe parameter is outside its admissible range."""


class GridError(LocalMartError):
    """A time, cap or horizon is incompatible with the time grid."""


class DomainError(LocalMartError):
    """Values fall outside the domain of a transform or scheme."""


class StructuralError(LocalMartError):
    """A strategy violates its structural invariants on some path."""


class ConstraintViolationError(LocalMartError):
    """A short-sale restricted strategy evaluates to a negative weight."""


class RefusalError(LocalMartError):
    """A constructive routine refuses an input that fails its premise."""


class BudgetError(LocalMartError):
    """An exhaustive enumeration would exceed the configured budget."""

    def __init__(self, needed: int, budget: int):
        super().__init__(
            f"enumeration needs {needed} candidates, budget is {budget}"
        )
        self.needed = needed
        self.budget = budget


class InternalConsistencyError(LocalMartError):
    """A case the underlying theory rules out was reached; treat as a bug."""


class ConfigError(LocalMartError):
    """A scenario config file failed to parse or validate."""

    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line
