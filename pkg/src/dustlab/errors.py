"""Exception types shared across the package."""


class DustError(Exception):
    """Base class for all package errors."""


class ParameterError(DustError, ValueError):
    """A caller-supplied value is outside its documented domain."""


class BudgetError(ParameterError):
    """A requested computation exceeds the configured resource budget."""


class FormatError(DustError, ValueError):
    """A grid or address file does not conform to its declared format."""


class RingUndeterminedError(DustError):
    """A point's ring cannot be resolved at the requested construction depth."""


class ConstructionError(DustError):
    """The annulus chain could not be built under the stated mass/slope proxy."""


class PlacementError(ConstructionError):
    """No sampled isometry produced a usable placement for a Cantor copy."""


class AssemblyError(ConstructionError):
    """Placed copies violate an assembly invariant (overlap where disjointness is required)."""
