"""Exception types raised across the toolkit."""

from __future__ import annotations


class SizesigError(Exception):
    """Base class for data errors (bad inputs, unusable captures, etc)."""


class CaptureFormatError(SizesigError):
    """A capture file could not be read.

    ``offset`` is the byte offset in the stream where parsing failed.
    """

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class UnsupportedFormatError(CaptureFormatError):
    pass


class UnsupportedLinkTypeError(CaptureFormatError):
    pass


class MalformedFrameError(SizesigError):
    pass


class TokenParseError(SizesigError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class NotDeviceTrafficError(SizesigError):
    """A record without a direction reached tokenization (filter was skipped)."""


class UndefinedSupportError(SizesigError):
    pass


class NoSignatureError(SizesigError):
    pass


class InvalidSignatureError(SizesigError):
    pass


class UnevaluableSignatureError(SizesigError):
    def __init__(self, event):
        super().__init__(f"no trace labeled {event} in dataset")
        self.event = event


class ManifestError(SizesigError):
    pass
