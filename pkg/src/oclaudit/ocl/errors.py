"""Errors raised by the constraint language front end."""
from __future__ import annotations

from .ast import SourceSpan


class ConstraintError(Exception):
    """Base class for constraint-language errors."""


class OclSyntaxError(ConstraintError):
    """Lexical or syntactic error, carrying the offending source position."""

    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


class ValidationError(ConstraintError):
    """One or more clauses failed validation; carries every diagnostic."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        lines = "; ".join(f"{d.span}: {d.message}" for d in self.diagnostics)
        super().__init__(lines)
