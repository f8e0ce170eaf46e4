"""Exception hierarchy. Every library error derives from ContactwavError so
the CLI can map data problems to a single exit code."""


class ContactwavError(Exception):
    pass


class MissingFile(ContactwavError, FileNotFoundError):
    pass


class MalformedManifest(ContactwavError, ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class UnsupportedAudioFormat(ContactwavError, ValueError):
    pass


class NonMonotonicTimestamps(ContactwavError, ValueError):
    pass


class OutOfRange(ContactwavError, ValueError):
    pass


class NonUnitQuaternion(ContactwavError, ValueError):
    pass


class DegenerateSixD(ContactwavError, ValueError):
    pass


class EmptyInput(ContactwavError, ValueError):
    pass


class InvalidSpec(ContactwavError, ValueError):
    pass


class InvalidConfig(ContactwavError, ValueError):
    pass


class TooShort(ContactwavError, ValueError):
    pass


class EmptyCorpus(ContactwavError, ValueError):
    pass


class ImageTooSmall(ContactwavError, ValueError):
    pass


class DimensionMismatch(ContactwavError, ValueError):
    pass


class NoOnset(ContactwavError):
    pass


class InsufficientContext(ContactwavError, ValueError):
    pass


class NoTaps(ContactwavError, ValueError):
    pass


class InsufficientFuture(OutOfRange):
    pass


class ExportError(ContactwavError):
    """Raised when a window cannot be built or written during export; the
    message carries the episode id and query time."""
