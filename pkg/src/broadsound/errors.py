"""Exception hierarchy shared across the package."""


class BroadsoundError(Exception):
    """Base class for all errors raised by this package."""


class TaxonomyError(BroadsoundError):
    """Invalid taxonomy config or unknown class code."""


class DataError(BroadsoundError):
    """Malformed or inconsistent dataset input (manifest, features, labels)."""


class AudioError(BroadsoundError):
    """Undecodable, empty, or unsupported audio input."""


class StoreCorruptError(BroadsoundError):
    """Annotation journal failed to replay; carries the offending line number."""

    def __init__(self, message: str, line_no: int | None = None):
        super().__init__(message)
        self.line_no = line_no
