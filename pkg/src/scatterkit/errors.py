"""Exception types shared across the package.

The CLI maps these onto exit codes: ParameterError -> 2, DataError -> 3,
FormatError -> 4.
"""


class ScatterkitError(Exception):
    pass


class ParameterError(ScatterkitError):
    """Invalid argument, configuration value, or shape."""


class DegenerateBankError(ParameterError):
    """Filter-bank parameters leave holes in the frequency plane."""


class DataError(ScatterkitError):
    """Input data is unusable (non-finite values, bad dataset layout, ...)."""


class IngestionError(DataError):
    """An image file could not be decoded."""

    def __init__(self, message, filename=None):
        super().__init__(message)
        self.filename = filename


class FormatError(ScatterkitError):
    """A binary file does not follow its declared format."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
