"""Exception hierarchy shared by all solver modules."""


class KreinError(Exception):
    """Base class for every error raised by kreinapprox."""


class NotHermitian(KreinError, ValueError):
    pass


class NotInvolution(KreinError, ValueError):
    pass


class NotSelfadjoint(KreinError, ValueError):
    pass


class DimensionMismatch(KreinError, ValueError):
    pass


class InvalidFundamentalSymmetry(KreinError, ValueError):
    pass


class NoSolution(KreinError):
    """A certified nonexistence verdict, not an input error.

    ``reason`` is one of the short codes used in result files, e.g.
    ``"NotNonnegative"``, ``"Inconsistent"``, ``"NotPositive"``.
    """

    def __init__(self, reason, message=None, certificate=None):
        self.reason = reason
        self.certificate = certificate
        super().__init__(message or reason)


class NotWeaklyComplementable(NoSolution):
    def __init__(self, message=None, certificate=None):
        super().__init__("NotWeaklyComplementable", message, certificate)


class RangeHypothesisFailed(NoSolution):
    def __init__(self, message=None, certificate=None):
        super().__init__("RangeHypothesisFailed", message, certificate)


class PathMismatch(KreinError, AssertionError):
    """Two independent value computations disagree. Always a bug."""


class InvalidState(KreinError, RuntimeError):
    pass


class ParseError(KreinError, ValueError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ValidationError(KreinError, ValueError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
