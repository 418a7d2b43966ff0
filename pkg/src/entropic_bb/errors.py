"""Exception types raised across the package.

Every error carries the name used in the documented error contracts, so
``except GridTooSmall`` reads the same as the contract it enforces.
"""


class BridgeError(Exception):
    """Base class for all package errors."""


class NonFiniteField(BridgeError, ValueError):
    pass


class GridTooSmall(BridgeError, ValueError):
    pass


class NotUnitDirection(BridgeError, ValueError):
    pass


class NonPositiveTime(BridgeError, ValueError):
    pass


class NegativeDensity(BridgeError, ValueError):
    pass


class DegenerateMarginal(BridgeError, ValueError):
    pass


class PlanTooLarge(BridgeError, ValueError):
    pass


class TooFewSlices(BridgeError, ValueError):
    pass


class NegativeMass(BridgeError, ValueError):
    pass


class InvalidAssumptionConstant(BridgeError, ValueError):
    pass


class BoundBlowUp(BridgeError, ArithmeticError):
    pass


class OriginNotInGrid(BridgeError, ValueError):
    pass


class InvalidEnvelopeParams(BridgeError, ValueError):
    pass


class RadiusOutsideGrid(BridgeError, ValueError):
    pass


class RadiusTooSmall(BridgeError, ValueError):
    pass


class SolverNotConverged(BridgeError, RuntimeError):
    pass
