from __future__ import annotations


class ReapError(RuntimeError):
    """Base class for every error raised by reapsnap."""


class ConfigError(ReapError):
    def __init__(self, problems: list[str] | str) -> None:
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ExperimentError(ReapError):
    pass


class ImageError(ReapError):
    pass


class OffsetOutOfBoundsError(ReapError):
    pass


class SnapshotFormatError(ReapError):
    pass


class BadMagicError(SnapshotFormatError):
    pass


class VersionMismatchError(SnapshotFormatError):
    pass


class HeaderFieldError(SnapshotFormatError):
    pass


class UnalignedOffsetError(SnapshotFormatError):
    pass


class DuplicateOffsetError(SnapshotFormatError):
    pass


class TruncatedFileError(SnapshotFormatError):
    pass


class SessionStateError(ReapError):
    pass


class WorkloadError(ReapError):
    pass


class CalibrationError(ReapError):
    pass


class AnalysisError(ReapError):
    pass


class UnsupportedPatternError(ReapError):
    pass


__all__ = [
    "AnalysisError",
    "BadMagicError",
    "CalibrationError",
    "ConfigError",
    "DuplicateOffsetError",
    "ExperimentError",
    "HeaderFieldError",
    "ImageError",
    "OffsetOutOfBoundsError",
    "ReapError",
    "SessionStateError",
    "SnapshotFormatError",
    "TruncatedFileError",
    "UnalignedOffsetError",
    "UnsupportedPatternError",
    "VersionMismatchError",
    "WorkloadError",
]
