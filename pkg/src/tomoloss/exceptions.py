"""Exception types shared across the package."""


class TomolossError(ValueError):
    """Base class for all domain errors raised by this package."""


class UnphysicalStateError(TomolossError):
    """Bloch vector lies outside the unit ball (beyond numerical slack)."""


class DomainError(TomolossError):
    """Argument outside the mathematical domain of an operation."""


class UndefinedDirectionError(TomolossError):
    """Operation needs the radial direction s/|s| but s = 0."""


class NotInformationallyCompleteError(TomolossError):
    """POVM direction vectors do not span R^3; inversion is impossible."""


class DivergentInformationError(TomolossError):
    """An outcome probability is (numerically) zero, so the per-trial
    information matrix diverges."""


class SingularMatrixError(TomolossError):
    """A matrix required to be invertible is singular."""


class SingularityError(TomolossError):
    """Evaluation at a point where the quantity diverges (e.g. the
    infidelity curvature on the pure-state boundary)."""


class WrongRegimeError(TomolossError):
    """A mixed-state formula was called with a pure state or vice versa."""


class ConfigError(TomolossError):
    """Malformed or inconsistent experiment configuration."""
