"""Exception hierarchy shared by all ebnc modules."""

from __future__ import annotations


class EbncError(Exception):
    """Base class; every error raised deliberately by the package derives from it."""

    exit_code = 1


class NetworkError(EbncError):
    exit_code = 10


class CycleDetected(NetworkError):
    exit_code = 11


class CptShapeMismatch(NetworkError):
    exit_code = 12


class RowNotNormalized(NetworkError):
    exit_code = 13


class ProbabilityOutOfInterior(NetworkError):
    exit_code = 14


class PartialConfiguration(NetworkError):
    exit_code = 15


class InvalidConfiguration(NetworkError):
    exit_code = 16


class CapExceeded(EbncError):
    exit_code = 20


class NonBinaryVariable(EbncError):
    exit_code = 21


class TriangularizationFailed(EbncError):
    exit_code = 22


class BasisMismatch(EbncError):
    exit_code = 30


class HessianNotPD(EbncError):
    exit_code = 31


class TooLarge(EbncError):
    exit_code = 40


class InvalidAlpha(EbncError):
    exit_code = 41


class DataError(EbncError):
    exit_code = 50


class UnknownLabel(DataError):
    exit_code = 51


class MissingValue(DataError):
    exit_code = 52


class SchemaMismatch(DataError):
    exit_code = 53


class ParseError(EbncError):
    exit_code = 60


class ConvergenceWarning(UserWarning):
    """Issued when every optimizer restart stops at the iteration cap."""
