"""Exception types shared across the package."""


class SharpwaveError(Exception):
    """Base class for all package errors."""


class LadderMismatch(SharpwaveError):
    """Two nets do not share the same epsilon ladder."""


class EmptyDomain(SharpwaveError):
    """An operation produced or required an empty domain intersection."""


class UnknownNonlinearity(SharpwaveError):
    """Nonlinearity id not in the catalog."""


class GridTooCoarse(SharpwaveError):
    """Grid has too few nodes for the requested stencil."""


class OutOfDomain(SharpwaveError):
    """A point or region lies outside the grid domain."""


class InsufficientLadder(SharpwaveError):
    """Fewer than three usable ladder points for a slope fit."""


class BadSpec(SharpwaveError):
    """Inconsistent data specification (e.g. band width >= support radius)."""


class BadRegionLadder(SharpwaveError):
    """Region ladder violates nesting or light-cone avoidance."""


class LatticeMismatch(SharpwaveError):
    """Operation requires a diagonal lattice (equal t and x spacing)."""


class LatticeTooLarge(SharpwaveError):
    """Materialized lattice would exceed the memory budget; use the streaming path."""


class NoConvergence(SharpwaveError):
    """Fixed-point iteration did not converge within the iteration cap."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


class ConfigError(SharpwaveError):
    """Run configuration failed to parse or validate."""
