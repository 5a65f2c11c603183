"""Exception types shared across the package."""


class TripleScoreError(Exception):
    """Base class for all data and pipeline errors raised by this package."""


class DataFormatError(TripleScoreError):
    """An input file or record does not match its expected format.

    Carries the offending path and 1-based line number when known.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}: "
        if line is not None:
            where += f"line {line}: "
        super().__init__(where + message)


class SchemaMismatchError(TripleScoreError):
    """A feature vector was used with a model trained on a different schema."""
