"""Exception types shared across the library."""


class ReluLiftError(Exception):
    """Base class for all library errors."""


class DimMismatch(ReluLiftError):
    "Raised when array shapes are inconsistent with the problem instance."


class CapExceeded(ReluLiftError):
    "Raised when an enumeration would produce more cells than the configured cap."


class NotEnumerated(ReluLiftError):
    "Raised when a vector matches no stored activation-pattern cell."


class InfeasiblePoint(ReluLiftError):
    "Raised when a point violates its cone constraints beyond tolerance."


class ProjectionStalled(ReluLiftError):
    "Raised when the alternating-projection loop stops making progress."


class NotScaled(ReluLiftError):
    "Raised when an operation requires every neuron to satisfy ||u|| = |alpha|."


class NotMinimal(ReluLiftError):
    "Raised when an operation requires a minimal network."


class NotNearlyMinimal(ReluLiftError):
    "Raised when an operation requires same-cone neurons to be positively colinear."


class TooFewNeurons(ReluLiftError):
    "Raised when a network has too few neuron slots for the requested construction."


class SpecMismatch(ReluLiftError):
    "Raised when splitting weights are invalid (negative or not summing to one)."


class NonFiniteLoss(ReluLiftError):
    "Raised when training diverges to a non-finite objective."


class NotStationary(ReluLiftError):
    "Raised when an operation requires a (numerically) stationary network."


class SolveFailed(ReluLiftError):
    "Raised when an auxiliary convex solve does not reach its target accuracy."


class AssertionFailure(ReluLiftError):
    "Raised by reproduction commands when a checked value is out of tolerance."
