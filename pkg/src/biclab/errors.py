"""Exception types shared by the engines."""


class DomainError(ValueError):
    """A query falls outside the domain of the operation (e.g. a point on an atom)."""


class DivergenceError(ArithmeticError):
    """A length, distance or area is infinite because of a cusp (atom of mass >= 2*pi)."""


class ResolutionError(ValueError):
    """A discretisation is too coarse to resolve the requested geometry."""


class BoundaryCaseError(ValueError):
    """A parameter sits exactly on a case boundary the oracle does not decide."""
