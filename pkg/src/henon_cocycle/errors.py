"""Exception hierarchy shared by all modules."""


class DynamicsError(Exception):
    """Base class for every numerical failure raised by this package."""


# one-dimensional layer
class NonEscaping(DynamicsError):
    pass


class BranchFailure(DynamicsError):
    pass


class PrecisionLoss(DynamicsError):
    pass


class SlowConvergence(DynamicsError):
    """Raised (or attached as a flag) when an iterative limit stalls.

    ``value`` holds the best available estimate and ``gap`` the last
    Cauchy gap, so callers that tolerate the failure can still use them.
    """

    def __init__(self, message, value=None, gap=None):
        super().__init__(message)
        self.value = value
        self.gap = gap


# Hénon layer
class ZeroJacobian(DynamicsError):
    pass


class NotEscaping(DynamicsError):
    pass


class NotEscapingBackward(DynamicsError):
    pass


class NotInUplus(DynamicsError):
    pass


class SubdivisionLimit(DynamicsError):
    pass


class NoConvergence(DynamicsError):
    pass


# critical locus
class ContinuationStall(DynamicsError):
    pass


class WrongComponent(DynamicsError):
    pass


class NotSameLeaf(DynamicsError):
    pass


class DegenerateTriple(DynamicsError):
    pass


# cocycle / group
class ZeroGauge(DynamicsError):
    pass


class NotPeriodic(DynamicsError):
    pass


class MatchFailure(DynamicsError):
    pass


class NotIdentified(DynamicsError):
    pass


class PreconditionUnmet(DynamicsError):
    pass


class CertificateFailure(DynamicsError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness
