"""Shared exception types."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class CapacityError(RuntimeError):
    """An exact method would exceed its configured size limits."""


class ConfigError(ValueError):
    """An experiment configuration is malformed or fails schema validation."""
