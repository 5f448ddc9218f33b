"""Exception hierarchy.

Every error carries its class name so the CLI can report it in the JSON
summary without a lookup table.
"""


class SegrayError(Exception):
    """Base class for all library errors."""

    @property
    def name(self) -> str:
        return type(self).__name__


# geometry
class DegenerateSegment(SegrayError, ValueError):
    pass


class NotInside(SegrayError, ValueError):
    pass


class Unbounded(SegrayError, ValueError):
    pass


class DomainInvalid(SegrayError, ValueError):
    pass


# tensorfield
class UnknownKind(SegrayError, ValueError):
    pass


class OrderUnsupported(SegrayError, ValueError):
    pass


# rayenergy
class QuadratureNotConverged(SegrayError, RuntimeError):
    pass


# pde
class GridTooCoarse(SegrayError, ValueError):
    pass


class SolverDiverged(SegrayError, RuntimeError):
    pass


class NonPositiveState(SegrayError, RuntimeError):
    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class NotConverged(SegrayError, RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NonPositiveValue(SegrayError, ValueError):
    pass


class OutsideDomain(SegrayError, ValueError):
    pass


class NotEven(SegrayError, ValueError):
    pass


class TimeMismatch(SegrayError, KeyError):
    pass


# concavity
class ProfileInvalid(SegrayError, ValueError):
    pass


class LimitUndefined(SegrayError, ValueError):
    pass


class SamplerStarved(SegrayError, RuntimeError):
    pass


class HypothesisViolated(SegrayError, RuntimeError):
    def __init__(self, message, worst=None):
        super().__init__(message)
        self.worst = worst


class SequenceLeftDomain(SegrayError, ValueError):
    pass


class WidthTooSmall(SegrayError, ValueError):
    pass


# cli
class ConfigInvalid(SegrayError, ValueError):
    pass
