"""Exception and warning types shared across the package."""


class TrapNoiseError(Exception):
    """Base class for all package errors."""


class ParseError(TrapNoiseError):
    pass


class ValidationError(TrapNoiseError, ValueError):
    pass


class DomainError(TrapNoiseError, ValueError):
    """Evaluation point outside the half-space above the electrode plane."""


class NonConvergence(TrapNoiseError):
    pass


class UnstablePoint(TrapNoiseError):
    """The total-potential Hessian is not positive definite."""


class QuadratureFailure(TrapNoiseError):
    pass


class DegenerateProjection(TrapNoiseError):
    pass


class InsufficientData(TrapNoiseError):
    pass


class DegenerateDenominator(TrapNoiseError, ZeroDivisionError):
    pass


class RankDeficiency(UserWarning):
    """Requested multipole target is not reachable with the available electrodes."""


class NegativeSmin(UserWarning):
    pass


class UnphysicalFraction(UserWarning):
    pass
