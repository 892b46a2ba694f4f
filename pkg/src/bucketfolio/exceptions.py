"""Exception and warning classes.

Errors fall in three families that map onto CLI exit codes:
``ConfigError`` (2), ``DataError`` (3) and ``NumericalError`` (4).
"""


class BucketfolioError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(BucketfolioError, ValueError):
    exit_code = 2


class DataError(BucketfolioError, ValueError):
    exit_code = 3


class NumericalError(BucketfolioError, ArithmeticError):
    exit_code = 4


# -- configuration -----------------------------------------------------------


class WindowTooLong(ConfigError):
    pass


class MissingInput(ConfigError):
    pass


# -- data ----------------------------------------------------------------------


class MissingCell(DataError):
    def __init__(self, row, column, raw=""):
        self.row = row
        self.column = column
        super().__init__(
            f"missing or unparseable cell at row {row!r}, column {column!r}"
            + (f" (got {raw!r})" if raw else "")
        )


class DuplicateDate(DataError):
    pass


class NonMonotonicDates(DataError):
    pass


class TooFewAssets(DataError):
    pass


class PanelMismatch(DataError):
    pass


class UnscoredAsset(DataError):
    def __init__(self, assets):
        self.assets = list(assets)
        super().__init__(f"assets without a score: {', '.join(map(str, self.assets))}")


class ScoreOutOfRange(DataError):
    pass


class NonPositiveCap(DataError):
    pass


class EmptyUniverse(DataError):
    pass


class TooShort(DataError):
    pass


class EmptySeries(TooShort):
    pass


class LengthMismatch(DataError):
    pass


class TotalLoss(DataError):
    pass


class OutOfRange(DataError):
    pass


# -- numerics ----------------------------------------------------------------


class DegenerateWindow(NumericalError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class BadInput(NumericalError):
    pass


class ZeroVariance(NumericalError):
    pass


class BacktestFailure(NumericalError):
    """A covariance or optimizer failure raised inside a rolling backtest."""

    def __init__(self, bucket, strategy, date, cause):
        self.bucket = bucket
        self.strategy = strategy
        self.date = date
        self.cause = cause
        super().__init__(
            f"bucket PT{bucket}, strategy {strategy}, window ending {date}: {cause}"
        )


# -- warnings ------------------------------------------------------------------


class UnknownAssetWarning(UserWarning):
    """Score file lists assets that are not part of the return panel."""


class EmptyBucketWarning(UserWarning):
    """A bucket holds no assets and is skipped in plots."""
