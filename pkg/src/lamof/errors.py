"""Exception hierarchy.

Every error carries a machine-readable ``code`` and an optional ``context``
dict; the CLI serializes both to stderr.  Errors caused by bad input map to
exit status 2.
"""
from __future__ import annotations

from typing import Any


class LamofError(Exception):
    code = "LAMOF_ERROR"
    exit_status = 2

    def __init__(self, message: str, **context: Any) -> None:
        super().__init__(message)
        self.message = message
        self.context = context

    def to_dict(self) -> dict[str, Any]:
        return {"code": self.code, "message": self.message, "context": self.context}


class InvalidMotion(LamofError):
    code = "INVALID_MOTION"


class InvalidSkeleton(LamofError):
    code = "INVALID_SKELETON"


class DimensionMismatch(LamofError):
    code = "DIMENSION_MISMATCH"


class ShapeMismatch(LamofError):
    code = "SHAPE_MISMATCH"


class DegenerateRotation(LamofError):
    code = "DEGENERATE_ROTATION"


class NotARotation(LamofError):
    code = "NOT_A_ROTATION"


class WrongRepresentation(LamofError):
    code = "WRONG_REPRESENTATION"


class RepresentationMismatch(LamofError):
    code = "REPRESENTATION_MISMATCH"


class TooFewSamples(LamofError):
    code = "TOO_FEW_SAMPLES"


class EvenWindow(LamofError):
    code = "EVEN_WINDOW"


class SingleSegment(LamofError):
    code = "SINGLE_SEGMENT"


class FrameCountMismatch(LamofError):
    code = "FRAME_COUNT_MISMATCH"


class NoFootJoints(LamofError):
    code = "NO_FOOT_JOINTS"


class TooShortForTransition(LamofError):
    code = "TOO_SHORT_FOR_TRANSITION"


class BadClipLength(LamofError):
    code = "BAD_CLIP_LENGTH"


class EmptyPrompt(LamofError):
    code = "EMPTY_PROMPT"


class Infeasible(LamofError):
    code = "INFEASIBLE_DURATION"


class LengthMismatch(LamofError):
    code = "LENGTH_MISMATCH"


class InvalidArgument(LamofError):
    code = "INVALID_ARGUMENT"


class FileFormatError(LamofError):
    code = "FILE_FORMAT"


class BadMagic(FileFormatError):
    code = "BAD_MAGIC"


class VersionUnsupported(FileFormatError):
    code = "VERSION_UNSUPPORTED"


class TruncatedFile(FileFormatError):
    code = "TRUNCATED_FILE"


class ChecksumMismatch(FileFormatError):
    code = "CHECKSUM_MISMATCH"


class MalformedFile(FileFormatError):
    code = "MALFORMED_FILE"
