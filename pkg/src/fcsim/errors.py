"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value(s).

    `keys` holds the offending flat config key names (e.g. "e1_par") so
    callers and CLI output can point at the exact inputs.
    """

    def __init__(self, message, keys=()):
        super().__init__(message)
        self.keys = tuple(keys)


class WeightingError(ValueError):
    """Inverse-variance weighting requested but a standard error is zero or missing."""


class InfeasibleFitError(RuntimeError):
    """The requested fit has no solution in its valid domain."""
