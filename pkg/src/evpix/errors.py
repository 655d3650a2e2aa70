"""Exception hierarchy. Everything derives from ValueError so callers that
only care about bad input can catch that."""


class EvpixError(ValueError):
    pass


class NonPositiveCurrent(EvpixError):
    pass


class DegenerateThreshold(EvpixError):
    pass


class TweakOutOfRange(EvpixError):
    pass


class PixelInoperative(EvpixError):
    """Refractory bias too weak to release the pixel from reset."""


class SamplingTooCoarse(EvpixError):
    pass


class OutOfBounds(EvpixError):
    pass


class InvalidGeometry(EvpixError):
    pass


class BadFrameFormat(EvpixError):
    pass


class InconsistentDimensions(EvpixError):
    pass


class ConfigMismatch(EvpixError):
    pass


class IncompleteMapping(EvpixError):
    pass


class ConfigError(EvpixError):
    pass
