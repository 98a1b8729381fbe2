"""
Exception types raised by the restoration toolkit.
"""


class RestorationError(Exception):
    """Root of every error the library raises on purpose."""


class ParameterError(RestorationError, ValueError):
    pass


class DimensionMismatchError(RestorationError, ValueError):
    pass


class ImageFormatError(RestorationError, OSError):
    pass


class EmptyCorpusError(RestorationError):
    pass
