"""Exception hierarchy shared by all featgate modules.

The three bases map onto CLI exit codes: ConfigError -> 2, DataError -> 3,
IoError -> 4.
"""


class FeatgateError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FeatgateError):
    """Invalid or inconsistent configuration."""


class DataError(FeatgateError):
    """Input data violates a documented contract."""


class IoError(FeatgateError):
    """Filesystem-level failure while reading or writing artifacts."""


# -- ingest ------------------------------------------------------------------

class MissingColumn(DataError):
    pass


class UnparsableDate(DataError):
    pass


class DuplicateDate(DataError):
    pass


class NonPositivePrice(DataError):
    pass


class TooShort(DataError):
    pass


class EmptyIntersection(DataError):
    pass


class AllGapColumn(DataError):
    pass


class OutOfRange(DataError):
    pass


# -- windowed features -------------------------------------------------------

class InsufficientHistory(DataError):
    pass


class InvalidFunctionCode(DataError):
    pass


class TooManyFeatures(DataError):
    pass


class UnknownSeries(DataError):
    pass


# -- booster -----------------------------------------------------------------

class TooFewRows(DataError):
    pass


class NonFiniteInput(DataError):
    pass


class DegenerateTarget(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class InvalidRates(DataError):
    pass


# -- metrics -----------------------------------------------------------------

class LengthMismatch(DataError):
    pass


class ConstantTruth(DataError):
    pass


class EmptySample(DataError):
    pass


# -- genetic optimizer / experiment harness ----------------------------------

class OutOfRangeGene(DataError):
    pass


class UnbalancedArms(DataError):
    pass
