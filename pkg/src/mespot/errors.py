"""Exception hierarchy.

Every error raised on purpose by the package derives from ``MespotError`` so
the CLI can report it as a one-line diagnostic.  The subclasses also inherit
from the closest builtin so callers can catch ``ValueError``/``OSError``.
"""


class MespotError(Exception):
    """Base class for all package errors."""

    module = "mespot"


# core
class MissingPath(MespotError, FileNotFoundError):
    module = "core"


class InconsistentFrameDims(MespotError, ValueError):
    module = "core"


class EmptyVolume(MespotError, ValueError):
    """Zero frames, or a raw volume whose payload does not match its header."""

    module = "core"


class ParseError(MespotError, ValueError):
    module = "core"


class DuplicateId(MespotError, ValueError):
    module = "core"


class InvalidInterval(MespotError, ValueError):
    module = "core"


# temporal_scale
class DegenerateVolume(MespotError, ValueError):
    module = "temporal_scale"


class BadTarget(MespotError, ValueError):
    module = "temporal_scale"


class OutOfRange(MespotError, ValueError):
    module = "temporal_scale"


# sampling
class WindowTooLong(MespotError, ValueError):
    module = "sampling"


class VideoTooShort(MespotError, ValueError):
    module = "sampling"


# descriptors
class ExtentTooSmall(MespotError, ValueError):
    module = "descriptors"


class BlockTooSmall(MespotError, ValueError):
    module = "descriptors"


class CacheFormatError(MespotError, ValueError):
    module = "descriptors"


# classifier
class SingleClass(MespotError, ValueError):
    module = "classifier"


class DimMismatch(MespotError, ValueError):
    module = "classifier"


class EmptyTrainingSet(MespotError, ValueError):
    module = "classifier"


class ModelFormatError(MespotError, ValueError):
    module = "classifier"


# spotting
class DigestMismatch(MespotError, ValueError):
    module = "spotting"


class NoValidScale(MespotError, ValueError):
    module = "spotting"


# evaluation
class TooFewSamples(MespotError, ValueError):
    module = "evaluation"


class SingleSubject(MespotError, ValueError):
    module = "evaluation"


class EmptyDataset(MespotError, ValueError):
    module = "evaluation"


class EmptyCurve(MespotError, ValueError):
    module = "evaluation"


class EmptyInput(MespotError, ValueError):
    module = "evaluation"
