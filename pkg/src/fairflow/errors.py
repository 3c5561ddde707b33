"""Exception hierarchy shared across fairflow modules."""

from __future__ import annotations


class FairflowError(Exception):
    """Base class for all library errors."""


class DomainError(FairflowError, ValueError):
    """A numeric argument lies outside the domain of an operation."""


class StructuralError(FairflowError, ValueError):
    """The graph does not support the request (unknown edge, unreachable sink)."""


class ValidationError(FairflowError, ValueError):
    """An object violates its declared invariants."""


class CapacityError(FairflowError, RuntimeError):
    """An enumerative method would exceed its configured size limit."""


class PreconditionError(FairflowError, ValueError):
    """An input does not satisfy an operation's precondition.

    Attributes:
        witness: optional data explaining the failure (e.g. the edges of a cycle).
    """

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class InfeasibleError(FairflowError, RuntimeError):
    """No feasible flow exists (e.g. M/M/1 capacity below demand)."""


class CapabilityError(FairflowError, NotImplementedError):
    """The requested construction is not available for this latency kind."""


class ConvergenceError(FairflowError, RuntimeError):
    """The iteration budget ran out before the stopping rule was met.

    Attributes:
        result: the best iterate found.
    """

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class ConstructionError(FairflowError, ValueError):
    """Gadget parameters violate the construction's requirements."""
