class EchoWallError(Exception):
    """Base class for all package errors."""


class InvalidPlane(EchoWallError, ValueError):
    pass


class DegenerateMirror(EchoWallError, ValueError):
    """A wall passes through the loudspeaker, so its mirror point is the speaker itself."""


class DegenerateScale(EchoWallError, ValueError):
    pass


class IllConditioned(EchoWallError, ValueError):
    """Microphones are coplanar (3D) or collinear (2D)."""


class InvalidConfiguration(EchoWallError, ValueError):
    pass


class UnsupportedConfiguration(EchoWallError):
    """A setup for which no almost-all-good result is known (3D with mounted speaker)."""


class ScenarioFailure(EchoWallError, AssertionError):
    pass
