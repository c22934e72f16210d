"""Exception hierarchy.

Two families matter to callers that need to tell input problems apart from
mathematical ones: :class:`NetworkFormatError` (malformed input, exit code 2
in the CLI) and :class:`InvariantViolation` (well-formed input that breaks a
stability or structural assumption, exit code 3).
"""


class EdgeModError(Exception):
    """Base class for every error raised by this package."""


class NetworkFormatError(EdgeModError, ValueError):
    pass


class ParseError(NetworkFormatError):
    pass


class NonPositiveWeight(NetworkFormatError):
    pass


class DuplicateEdge(NetworkFormatError):
    pass


class InvalidNodeSet(NetworkFormatError):
    pass


class InvariantViolation(EdgeModError, ValueError):
    pass


class UnstableNetwork(InvariantViolation):
    pass


class SpectralConditionViolated(InvariantViolation):
    pass


class Disconnected(InvariantViolation):
    pass


class NegativeResultingWeight(InvariantViolation):
    pass


class ZeroSpectralRadius(EdgeModError, RuntimeError):
    pass


class SingularResolvent(InvariantViolation):
    pass


class TruncationNotConverged(EdgeModError, RuntimeError):
    pass


class LyapunovNotConverged(EdgeModError, RuntimeError):
    pass


class WeightOutOfRange(EdgeModError, ValueError):
    pass


class DestabilizingWeight(WeightOutOfRange):
    pass


class NoAdmissibleEdge(EdgeModError, RuntimeError):
    pass


class AllNodeInputRequired(EdgeModError, ValueError):
    pass


class DegenerateAlpha(EdgeModError, ArithmeticError):
    pass


class UnstableSystem(EdgeModError, ValueError):
    pass


class DimensionMismatch(EdgeModError, ValueError):
    pass


class HorizonTooShort(EdgeModError, ValueError):
    pass
