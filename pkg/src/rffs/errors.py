"""Exception hierarchy shared by every rffs module."""


class RffsError(Exception):
    """Base class for all documented rffs failures."""


class EmptyManifest(RffsError, ValueError):
    pass


class NoTileFound(RffsError, LookupError):
    def __init__(self, point):
        self.point = tuple(point)
        super().__init__(f"no tile contains point {self.point}")


class EmptyCloud(RffsError, ValueError):
    pass


class InvalidK(RffsError, ValueError):
    pass


class InvalidSide(RffsError, ValueError):
    pass


class InvalidGridSize(RffsError, ValueError):
    pass


class IntensityRange(RffsError, ValueError):
    pass


class IncompleteStats(RffsError, KeyError):
    pass


class InvalidSpeed(RffsError, ValueError):
    pass


class InvalidClass(RffsError, ValueError):
    pass


class NonFiniteFeature(RffsError, ValueError):
    pass


class ShapeMismatch(RffsError, ValueError):
    pass


class FormatError(RffsError, ValueError):
    """File does not follow the expected binary or JSON layout."""


class TruncatedFile(FormatError):
    """Payload is shorter than its header declares."""


class EmptyDataset(RffsError, ValueError):
    pass


class MissingFeature(RffsError, FileNotFoundError):
    pass


class FileError(RffsError, OSError):
    pass


class NumericalError(RffsError, ArithmeticError):
    """Internal numerical failure, e.g. a covariance eigenvalue well below zero."""
