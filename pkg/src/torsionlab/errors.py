"""Exception hierarchy shared by all torsionlab modules."""


class TorsionLabError(Exception):
    """Base class for every error raised by torsionlab."""


class NotConvex(TorsionLabError):
    """A support function whose radius of curvature is not positive."""

    def __init__(self, message, theta=None, w=None):
        super().__init__(message)
        self.theta = theta
        self.w = w


class DegenerateSupport(TorsionLabError):
    pass


class GenerationFailed(TorsionLabError):
    pass


class GridTooCoarse(TorsionLabError):
    pass


class NeedleBody(GridTooCoarse):
    """Aspect ratio too large for cut-cell conditioning."""


class PointOutsideStencil(GridTooCoarse):
    pass


class TooCloseToBoundary(TorsionLabError):
    pass


class SolveFailed(TorsionLabError):
    pass


class CrossCheckFailed(TorsionLabError):
    pass


class LeavesConvexCone(TorsionLabError):
    pass


class ConstraintNotMet(TorsionLabError):
    pass


class QuadratureUnderResolved(TorsionLabError):
    pass


class ParseError(TorsionLabError):
    pass
