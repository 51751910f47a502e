"""Exception hierarchy and process exit codes.

Four failure families map to distinct CLI exit codes so that callers can
tell schema problems apart from calibration, tracking and statistics
failures without parsing messages.
"""

from __future__ import annotations

EXIT_OK = 0
EXIT_GENERIC = 1
EXIT_SCHEMA = 2
EXIT_CALIBRATION = 3
EXIT_TRACKING = 4
EXIT_STATISTICS = 5


class WheelcomError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = EXIT_GENERIC


class SchemaError(WheelcomError):
    """Malformed or inconsistent input documents."""

    exit_code = EXIT_SCHEMA


class CalibrationError(WheelcomError):
    """A calibration step could not be completed."""

    exit_code = EXIT_CALIBRATION


class TrackingError(WheelcomError):
    """A cluster or segment could not be tracked in a frame."""

    exit_code = EXIT_TRACKING


class StatisticsError(WheelcomError):
    """Statistics requested on insufficient or empty inputs."""

    exit_code = EXIT_STATISTICS


# -- geometry ---------------------------------------------------------------

class NonFiniteInput(WheelcomError):
    """An input coordinate is NaN or infinite."""


class FewerThanThreeCommonLabels(TrackingError):
    """A rigid fit needs at least three shared point labels."""


class DegenerateGeometry(WheelcomError):
    """Points are collinear or coincident; the requested frame or fit is
    not defined."""


class DegenerateAxis(DegenerateGeometry):
    """Coordinate-system construction received collinear or coincident
    inputs."""


# -- clusters ---------------------------------------------------------------

class MarkerNeverVisible(CalibrationError):
    """A listed marker is absent from every usable static frame."""


class TrackingFailed(TrackingError):
    """Too few markers visible to track a cluster, or a required point is
    missing from a frame."""


class DuplicateLabel(WheelcomError):
    """A label already exists in the cluster's point sets."""


# -- anthropometry ----------------------------------------------------------

class MalformedDocument(SchemaError):
    """The anthropometric document does not match its schema."""


class MissingSegment(SchemaError):
    """A (segment, sex) entry is absent from the anthropometric table."""


class MassFractionOutOfRange(SchemaError):
    """A mass fraction is outside (0, 1) or the per-sex sum is off by more
    than 1%."""


# -- force plates -----------------------------------------------------------

class EmptyRecord(WheelcomError):
    """A force record contains no samples."""


class NegligibleLoad(WheelcomError):
    """Total zeroed force is below the epsilon; the CoP is undefined."""


class EmptyWindow(WheelcomError):
    """No samples fall inside the averaging window."""


class AllSamplesNegligible(WheelcomError):
    """Every sample in the window failed the load threshold."""


# -- validation statistics ---------------------------------------------------

class EmptyInput(StatisticsError):
    """No trial results supplied."""


class TooFewResults(StatisticsError):
    """At least two results needed for agreement statistics."""


# -- synthetic sessions -------------------------------------------------------

class InfeasibleCoM(WheelcomError):
    """The requested CoM projection lies outside the contact polygon, so no
    non-negative force distribution exists."""


# -- files and formats ---------------------------------------------------------

class SchemaViolation(SchemaError):
    """A session file violates its format (reported with file, line and
    column where known)."""


class UnitMismatch(SchemaError):
    """A file header declares units other than metres / newtons / seconds."""


class IoFailure(WheelcomError):
    """Output files could not be written."""
