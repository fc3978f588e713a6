"""Exception types shared across the package."""


class RelsentError(Exception):
    """Base class for all package errors."""


class ShapeError(RelsentError, ValueError):
    """Array shapes do not line up."""


class DataError(RelsentError, ValueError):
    """Malformed corpus, embedding file or annotation."""


class BundleError(DataError):
    """A serialized model bundle could not be read."""


class NumericFault(RelsentError, ArithmeticError):
    """A loss or gradient became NaN or infinite."""
