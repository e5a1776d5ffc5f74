class AlphabetMismatchError(ValueError):
    """Two objects that must share an alphabet do not."""


class InfeasibleError(ValueError):
    """The distortion level is below the achievable floor."""


class BudgetExceededError(RuntimeError):
    """An exhaustive enumeration would exceed the configured budget."""


class NotRationalError(TypeError):
    """An exact computation received a value without an exact rational form."""


class SchemaError(ValueError):
    """An instance or witness document does not follow the expected format."""
