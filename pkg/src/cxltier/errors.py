"""Exception types shared across the package."""


class CxlTierError(Exception):
    """Base class for all package-specific errors."""


class CodecFormatError(CxlTierError, ValueError):
    """Compressed payload is malformed or inconsistent with its scheme.

    ``offset``, when set, is the byte position in the payload where
    decoding failed.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at payload offset {offset})"
        super().__init__(message)
        self.offset = offset


class ConfigError(CxlTierError, ValueError):
    """A configuration document failed to parse or validate."""


class TraceParseError(ConfigError):
    """A trace file line could not be parsed.  Carries the 1-based line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class StateError(CxlTierError, RuntimeError):
    """Operation violates the current lifecycle state (duplicate store, etc.)."""


class PageNotFoundError(CxlTierError, LookupError):
    """Referenced page is not live in the queried tier."""


class CapacityExhaustedError(CxlTierError, RuntimeError):
    """The compressed tier cannot satisfy the allocation even after compaction.

    This is the admission-control signal: the host must keep the page
    resident (or free device pages) before retrying.
    """


class UnsupportedGranularityError(CxlTierError, RuntimeError):
    """Line-granular access hit a page stored at block granularity."""
