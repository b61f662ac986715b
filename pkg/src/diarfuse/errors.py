"""Shared exception types.

Parsing problems (bad bytes, malformed records) raise ``ParseError``;
structurally well-formed input that breaks a domain invariant raises
``ValidationError``.  The CLI maps these to distinct exit codes.
"""

from __future__ import annotations


class DiarfuseError(Exception):
    """Base class for all library errors."""


class ParseError(DiarfuseError):
    """A document could not be decoded or a record is malformed.

    ``offset`` is a character offset into the document (JSON documents),
    ``line`` a 1-based line number (line-oriented formats).  Either may
    be None when it does not apply.
    """

    def __init__(self, message: str, *, offset: int | None = None, line: int | None = None):
        super().__init__(message)
        self.offset = offset
        self.line = line


class ValidationError(DiarfuseError):
    """Well-formed input violates a domain invariant.

    ``phrase_id`` names the offending phrase when the violation is
    phrase-scoped.
    """

    def __init__(self, message: str, *, phrase_id: int | None = None):
        super().__init__(message)
        self.phrase_id = phrase_id


class DownstreamError(DiarfuseError):
    """An external dependency (object store, oracle endpoint) failed after retries."""


class NotFoundError(DiarfuseError):
    """A referenced job or resource does not exist."""
