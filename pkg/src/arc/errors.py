"""Exception types shared across the package."""


class ArcError(Exception):
    """Base class for all domain errors raised by this package."""


class InvalidChannels(ArcError):
    """Raster has the wrong number of channels for the operation."""


class OutOfBounds(ArcError):
    """A rectangle or index falls outside the raster it addresses."""


class DegenerateImage(ArcError):
    """Image has zero variance, no threshold can separate it."""


class NoForeground(ArcError):
    """Binary mask contains no foreground pixels."""


class NoObject(ArcError):
    """The pipeline found no object in the frame."""


class ShapeError(ArcError):
    """Tensor shapes are inconsistent with the layer contract."""


class InvalidLabel(ArcError):
    """Label vector is not one-hot."""


class NumericalError(ArcError):
    """Non-finite values encountered; the operation was aborted."""


class ConfigError(ArcError):
    """Configuration or dataset layout is invalid."""


class BadImage(ArcError):
    """Image bytes could not be decoded."""


class SessionClosed(ArcError):
    """Mutating operation attempted on a closed checkout session."""


class UnknownSession(ArcError):
    """No session exists with the given id."""


class UnknownItem(ArcError):
    """Item id is not present in the catalog."""


class EmptyCart(ArcError):
    """Checkout attempted on a session with no cart lines."""
