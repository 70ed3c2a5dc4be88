"""Exception types raised by heatalign.

Two broad families matter to the CLI: `ValidationError` subclasses map to
exit code 1, `IoFailure` to exit code 2.
"""


class HeatalignError(Exception):
    """Base class for all heatalign errors."""


class ValidationError(HeatalignError):
    """Bad input data or parameters."""


class IoFailure(HeatalignError):
    """Reading or writing a file failed."""


# -- heatmaps / annotations ------------------------------------------------

class EmptyAnnotationSet(ValidationError):
    pass


class BoxOutOfCanvas(ValidationError):
    pass


class NegativeValue(ValidationError):
    pass


class NonFiniteValue(ValidationError):
    pass


class ZeroMass(ValidationError):
    """All-zero vector where positive mass is required."""


# -- distance metrics ------------------------------------------------------

class LengthMismatch(ValidationError):
    pass


class DegenerateInput(ValidationError):
    """Input for which the metric's definition divides by zero."""


class DimensionMismatch(ValidationError):
    pass


class TooFewMethods(ValidationError):
    pass


# -- thresholding ----------------------------------------------------------

class ThresholdOutOfRange(ValidationError):
    pass


# -- rankings / RBO --------------------------------------------------------

class NoVotes(ValidationError):
    pass


class MissingMetricRow(ValidationError):
    pass


class DepthOutOfRange(ValidationError):
    pass


class EmptyRanking(ValidationError):
    pass


class PersistenceOutOfRange(ValidationError):
    pass


# -- ingestion -------------------------------------------------------------

class MalformedCsv(ValidationError):
    """A CSV row failed to parse; the message names file and line."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class MalformedImage(ValidationError):
    """A PGM/PPM file failed to parse; the message names the file."""


class UnknownMethod(ValidationError):
    """A method identifier not present in the configured registry."""
