"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Bad configuration file, key, or value."""


class InvariantViolation(RuntimeError):
    """A physical or numerical invariant failed during a run."""
