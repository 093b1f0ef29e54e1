"""Exception hierarchy for gridsense."""


class GridSenseError(Exception):
    """Base class for all errors raised by this package."""


class NetworkError(GridSenseError):
    """A network description violates a structural invariant."""


class DuplicateBusId(NetworkError):
    pass


class DanglingLineRef(NetworkError):
    pass


class Underdetermined(NetworkError):
    """Fewer measurements than buses (L + M < N)."""


class EmptyMeterSet(NetworkError):
    pass


class MissingPhaseBlock(NetworkError):
    """A three-phase line lacks one of its 3x3 admittance blocks."""


class QuantizerError(GridSenseError):
    pass


class NonFiniteInput(QuantizerError):
    pass


class CellOutOfRange(QuantizerError):
    pass


class DimensionMismatch(GridSenseError):
    pass


class ProfileGap(GridSenseError):
    """A resolution profile does not cover every measurement channel."""


class UnsupportedK(GridSenseError):
    """The requested number of quantized channels cannot be formed."""


class NumericBlowup(GridSenseError):
    """A solver quantity became non-finite; the iteration has diverged."""


class SingularSystem(GridSenseError):
    pass


class ConfigParseError(GridSenseError):
    pass
