"""Exception types raised across the matting pipeline."""


class MattingError(Exception):
    """Base class for all errors raised by ssmatte."""


class UnsupportedFormat(MattingError, ValueError):
    pass


class NoKnownPixels(MattingError, ValueError):
    pass


class NoForegroundSamples(MattingError, ValueError):
    pass


class NoBackgroundSamples(MattingError, ValueError):
    pass


class ImageTooSmall(MattingError, ValueError):
    pass


class BadLambda(MattingError, ValueError):
    pass


class NoUnknownPixels(MattingError, ValueError):
    pass


class LengthMismatch(MattingError, ValueError):
    pass


class DimensionMismatch(MattingError, ValueError):
    pass


class EmptyRegion(MattingError, ValueError):
    pass


class ZeroBaseline(MattingError, ValueError):
    pass


class MissingGroundTruth(MattingError, ValueError):
    pass


class EmptyDataset(MattingError, ValueError):
    pass


class NotConverged(MattingError, RuntimeError):
    """CG hit its iteration cap. The last iterate is kept on the exception."""

    def __init__(self, residual, iterations, solution):
        super().__init__(
            f"conjugate gradient did not converge after {iterations} iterations "
            f"(relative residual {residual:.3e})"
        )
        self.residual = residual
        self.iterations = iterations
        self.solution = solution
