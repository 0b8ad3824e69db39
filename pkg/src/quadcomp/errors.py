"""Exception hierarchy shared by the library and the command line front end."""


class QuadcompError(Exception):
    """Base class for all errors raised by :mod:`quadcomp`."""


class InvalidArgument(QuadcompError, ValueError):
    pass


class NotASemimetric(InvalidArgument):
    """A quadratic form takes a negative value on an edge vector."""

    def __init__(self, pair, value):
        self.pair = tuple(pair)
        self.value = float(value)
        super().__init__(
            f"form is negative on edge {self.pair}: value {self.value:.6g}")


class NotEuclidean(InvalidArgument):
    pass


class NotOnSide(InvalidArgument):
    pass


class VerdictError(QuadcompError):
    """Requested embedding target is ruled out by a violated inequality."""

    def __init__(self, message, witness=None):
        self.witness = witness
        super().__init__(message)


class NotCBB(VerdictError):
    pass


class NotCAT(VerdictError):
    pass


class InternalInconsistency(QuadcompError, RuntimeError):
    pass


class UndefinedAngle(InvalidArgument):
    """A comparison angle at a vertex with a vanishing adjacent side."""
