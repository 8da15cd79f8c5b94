"""Exception types raised by tikholearn."""


class TikholearnError(Exception):
    """Base class for all library errors."""


class ShapeError(TikholearnError, ValueError):
    def __init__(self, detail=""):
        super().__init__(f"shape error: {detail}" if detail else "shape error")


class DegenerateOperatorError(TikholearnError, ValueError):
    pass


class DecompositionError(TikholearnError, ArithmeticError):
    pass


class ParameterRangeError(TikholearnError, ValueError):
    pass


class EmptyDataError(TikholearnError, ValueError):
    pass


class RankError(TikholearnError, ValueError):
    """Rank selection failed or was asked for something impossible."""


class NoSpectralGapError(RankError):
    pass


class InvalidSpectrumError(TikholearnError, ValueError):
    pass


class LinearizationError(TikholearnError, ArithmeticError):
    pass


class ConfigError(TikholearnError, ValueError):
    pass
