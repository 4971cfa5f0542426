"""Exception hierarchy.

``DataError`` subclasses signal bad input data (exit code 2 in the CLI);
anything else escaping the CLI is treated as an internal error.
"""


class LeafError(Exception):
    """Base class for all package errors."""


class DataError(LeafError):
    """Input data is missing, malformed or unusable."""


# dataset
class MissingFile(DataError, FileNotFoundError):
    pass


class MalformedRow(DataError):
    def __init__(self, row: int, reason: str):
        super().__init__(f"row {row}: {reason}")
        self.row = row


class NonContiguousClassIds(DataError):
    pass


class InsufficientClassSize(DataError):
    pass


class DecodeError(DataError):
    pass


class UnsupportedFormat(DataError):
    pass


# segmentation / geometry
class SegmentationFailed(DataError):
    pass


class UnimodalHistogram(SegmentationFailed):
    pass


class EmptyMask(SegmentationFailed):
    pass


class DimensionMismatch(DataError, ValueError):
    pass


class DegenerateContour(DataError):
    pass


class ZeroPerimeter(DataError):
    pass


class ZeroMinRadius(DataError):
    pass


class FrequencyOutOfRange(LeafError, ValueError):
    pass


class ZeroDC(DataError):
    pass


# color / texture
class TooFewPixels(DataError):
    pass


class ZeroMean(DataError):
    pass


# normalization / classifier
class EmptyMatrix(DataError, ValueError):
    pass


class RaggedRows(DataError, ValueError):
    pass


class NonPositiveSigma(LeafError, ValueError):
    pass


class MissingClass(DataError):
    pass


class UnknownClass(LeafError, KeyError):
    pass


# persistence
class VersionMismatch(DataError):
    pass


class CorruptModel(DataError):
    pass
