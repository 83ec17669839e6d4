"""Shared error hierarchy.

Every domain error raised by this package derives from StructLangError so
callers (and the CLI) can distinguish bad input from I/O trouble.
"""
from __future__ import annotations


class StructLangError(Exception):
    """Base class for all domain errors."""


class IoError(StructLangError):
    """A file could not be read or written."""
