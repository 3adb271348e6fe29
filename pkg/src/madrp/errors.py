"""Exception hierarchy. Everything raised on purpose derives from ``MadRPError``."""


class MadRPError(Exception):
    """Base class."""


class DataError(MadRPError, ValueError):
    """Malformed price/return data. ``cell`` is ``(row, column)`` when known."""

    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


class DimensionError(MadRPError, ValueError):
    pass


class NotAdditiveError(MadRPError, ValueError):
    """The pairwise sign-agreement condition for MAD additivity fails."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class DegenerateMarketError(MadRPError, ValueError):
    """Some nonzero long-only portfolio has zero MAD, so risk parity is not unique."""


class UndefinedMetric(MadRPError, ValueError):
    """A ratio whose denominator vanishes."""


class SolverError(MadRPError, RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
