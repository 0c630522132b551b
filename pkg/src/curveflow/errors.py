"""Exception hierarchy shared by all curveflow modules."""


class CurveFlowError(Exception):
    """Base class for every error raised by curveflow."""


class GeometryError(CurveFlowError, ValueError):
    pass


class DegenerateSegment(GeometryError):
    """Two consecutive nodes (nearly) coincide."""


class WrongOrientation(GeometryError):
    """A closed curve is not counterclockwise."""


class EndpointOffSubstrate(GeometryError):
    """An open chain endpoint does not lie on y = 0, or an interior node is not above it."""


class SingularSystem(CurveFlowError, ArithmeticError):
    pass


class ExtinctionReached(CurveFlowError, ValueError):
    """Requested time is at or beyond the collapse time of the circle."""


class ClippingFailure(CurveFlowError):
    pass


class ConfigError(CurveFlowError, ValueError):
    pass
