"""Exception taxonomy shared across the package.

The CLI maps these classes onto exit codes: ConfigError and
ValidationError exit with 2, ParseError (and its SchemaError subclass)
with 3, ProviderError and TransportError with 4.
"""

from __future__ import annotations


class ComviError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(ComviError):
    """A configuration value is out of range or otherwise invalid.

    The message names the offending field.
    """


class ValidationError(ComviError):
    """Structurally valid data violates a documented invariant."""


class ParseError(ComviError):
    """Input bytes could not be decoded or tokenized.

    Carries the 1-based line number or byte offset of the failure when
    one is known; both are folded into the message.
    """

    def __init__(self, message: str, *, line: int | None = None,
                 offset: int | None = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.line = line
        self.offset = offset


class SchemaError(ParseError):
    """Parsed input is missing a required key or has a mistyped value.

    The message names the key.
    """


class ProviderError(ComviError):
    """An embedding provider failed or returned malformed vectors."""


class TransportError(ProviderError):
    """A remote provider stayed unreachable after the retry."""
