"""Exception types shared across fairkit modules."""


class FairkitError(Exception):
    """Base class for every fault raised by fairkit."""


class DagError(FairkitError, ValueError):
    """Invalid graph structure or an unknown variable."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ParseError(FairkitError, ValueError):
    """A declaration file could not be parsed.

    ``line`` is 1-based.
    """

    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)
        self.line = line
        self.path = path


class DatasetError(FairkitError, ValueError):
    """Malformed or inconsistent categorical data."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class UndefinedStratumError(FairkitError, ValueError):
    """Conditioning on an assignment with zero probability."""

    def __init__(self, message, stratum=None):
        super().__init__(message)
        self.stratum = stratum


class PositivityError(UndefinedStratumError):
    """A truncated product needs a conditional table that the data never defines."""


class FairnessError(FairkitError, ValueError):
    """A fairness metric cannot be evaluated on the given data."""


class RepairError(FairkitError, ValueError):
    """A repair problem is malformed or cannot be solved."""
