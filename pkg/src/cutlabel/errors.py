"""Shared exception types."""

from __future__ import annotations


class DataError(Exception):
    """An on-disk artifact is malformed, truncated, or internally inconsistent."""
