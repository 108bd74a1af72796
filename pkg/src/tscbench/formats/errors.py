"""Structured errors shared by both format codecs."""

from __future__ import annotations


class FormatError(Exception):
    """Any failure to parse, build, or emit a scenario file."""


class FormatSyntaxError(FormatError):
    """Malformed document; `offset` is a byte offset where known."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message if offset is None else f"{message} (byte offset {offset})")
        self.offset = offset


class SemanticError(FormatError):
    """Well-formed document with invalid content; names the entity."""

    def __init__(self, message: str, entity: str | None = None):
        super().__init__(message if entity is None else f"{entity}: {message}")
        self.entity = entity


class UnrepresentableError(FormatError):
    """The target format cannot encode a feature of this network/flow set."""
