"""Exception taxonomy shared across the engine.

Every error raised by the package derives from :class:`SaberError` so callers
can catch one base class at pipeline boundaries while tests assert on the
specific subclass.
"""

from __future__ import annotations


class SaberError(Exception):
    """Base class for all engine errors."""


# -- data layer ---------------------------------------------------------------

class MissingFile(SaberError):
    pass


class MalformedRow(SaberError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class UnsortedOrDuplicateDate(SaberError):
    def __init__(self, date):
        super().__init__(f"bars not strictly increasing at {date}")
        self.date = date


class UnknownSymbol(SaberError):
    pass


class LookAheadViolation(SaberError):
    """A read requested data dated after the view's cutoff."""


class InsufficientHistory(SaberError):
    def __init__(self, requested: int, available: int):
        super().__init__(f"requested {requested} bars, only {available} available")
        self.requested = requested
        self.available = available


class DateNotInCalendar(SaberError):
    pass


# -- strategies ---------------------------------------------------------------

class SingularDesignMatrix(SaberError):
    pass


class EmptyCandidateSet(SaberError):
    pass


class NoEligibleCandidates(SaberError):
    pass


class DegenerateReturns(SaberError):
    def __init__(self, symbol: str):
        super().__init__(f"zero return variance for {symbol}")
        self.symbol = symbol


# -- engine -------------------------------------------------------------------

class ZeroShares(SaberError):
    pass


class NonPositivePrice(SaberError):
    pass


class NoBarsInWindow(SaberError):
    pass


# -- pipeline -----------------------------------------------------------------

class EmptyRange(SaberError):
    pass


class EmptyResults(SaberError):
    pass


# -- analytics ----------------------------------------------------------------

class LengthMismatch(SaberError):
    pass


class TooFewObservations(SaberError):
    pass


class TotalLoss(SaberError):
    pass


class ZeroDays(SaberError):
    pass


class NonPositiveValue(SaberError):
    pass


class ZeroVolatility(SaberError):
    """Return series has zero variance; Sharpe is undefined."""


class NoDownside(SaberError):
    """Fewer than two strictly negative returns; Sortino is undefined."""


class ZeroVarianceDifferences(SaberError):
    pass


class DegenerateRegressor(SaberError):
    pass


class InvalidDf(SaberError):
    pass


class NoDataForYear(SaberError):
    pass


# -- adapter ------------------------------------------------------------------

class AdapterError(SaberError):
    pass


class SpawnFailure(AdapterError):
    pass


class HandshakeTimeout(AdapterError):
    pass


class VersionMismatch(AdapterError):
    pass


class AdapterTimeout(AdapterError):
    pass


class BrokenPipeError_(AdapterError):
    """Subprocess closed its end of the pipe mid-session."""


class MalformedAction(AdapterError):
    pass


# -- cli ----------------------------------------------------------------------

class ConfigError(SaberError):
    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


class DataError(SaberError):
    pass


class MissingArtifacts(SaberError):
    pass
