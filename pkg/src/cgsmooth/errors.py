"""Exception types shared across the package."""


class SpecificationError(ValueError):
    """Invalid parameters or an inconsistent signal specification."""


class DimensionError(ValueError):
    """Operands of incompatible lengths."""


class PsnrUndefinedError(ValueError):
    """Reference signal has zero dynamic range, so PSNR has no peak."""


class SingularDegreeError(ZeroDivisionError):
    """A vertex degree is not strictly positive."""


class SizeError(ValueError):
    """Refusing to materialize a dense matrix above the guard size."""


class BreakdownError(ArithmeticError):
    """A CG cycle hit a zero/negative curvature or a non-finite step.

    ``iterate`` holds the last finite iterate, ``log`` the iteration log
    accumulated up to the failure and ``applications`` the operator
    applications spent, including the failed one.
    """

    def __init__(self, message, iterate=None, log=None, applications=0):
        super().__init__(message)
        self.iterate = iterate
        self.log = log
        self.applications = applications
