"""Exception types shared across the package."""


class DomainError(ValueError):
    """A value is outside its physical domain (e.g. a non-positive disparity)."""


class UsageError(ValueError):
    """An API was called with inconsistent arguments or on invalid state."""
