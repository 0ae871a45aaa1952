"""Exception types raised across horolab."""


class HorolabError(Exception):
    """Base class for all library errors."""


class NotInCone(HorolabError, ValueError):
    pass


class SingularInput(HorolabError, ValueError):
    pass


class DimensionTooLarge(HorolabError, ValueError):
    pass


class EnumerationOverflow(HorolabError, RuntimeError):
    pass


class FlowOverflow(HorolabError, OverflowError):
    """Raised instead of returning inf when |t * x_i| exceeds the safe range."""


class ReferenceMeanMissing(HorolabError, ValueError):
    pass


class BlockTooLarge(HorolabError, ValueError):
    pass


class UnsupportedRank(HorolabError, ValueError):
    pass


class BoundTooSmall(HorolabError, ValueError):
    pass


class InsufficientData(HorolabError, ValueError):
    pass


class UnsupportedVariety(HorolabError, ValueError):
    pass


class InvalidConfig(HorolabError, ValueError):
    pass


class EmptySeries(HorolabError, ValueError):
    pass
