"""Error taxonomy shared by the library and the CLI.

Three kinds, matching how the CLI reports failures on stderr
(``ERROR:<kind>: message``):

- ``format``: malformed or truncated input files (carries path/offset),
- ``data``:   structurally valid input with unusable values (NaN,
  unnormalized attention rows, degenerate signals),
- ``usage``:  parameters outside an operation's domain.
"""

from __future__ import annotations


class TrajectError(Exception):
    """Base class for all errors raised by this package."""

    kind = "internal"


class FormatError(TrajectError):
    """Malformed input file: bad magic, bad header, truncated payload."""

    kind = "format"

    def __init__(self, message: str, *, path: str | None = None, offset: int | None = None):
        self.path = path
        self.offset = offset
        parts = [message]
        if path is not None:
            parts.append(f"file={path}")
        if offset is not None:
            parts.append(f"byte_offset={offset}")
        super().__init__(" | ".join(parts))


class DataError(TrajectError):
    """Input values violate a data invariant (NaN, bad normalization, ...)."""

    kind = "data"


class DegenerateSignalError(DataError):
    """A signal is constant where a spread of values is required."""


class UsageError(TrajectError):
    """A parameter lies outside the operation's documented domain."""

    kind = "usage"
