"""Exception hierarchy shared by all gedkit modules."""

from __future__ import annotations

from typing import Optional


class GedError(Exception):
    """Base class for every error raised by gedkit."""


class FormatError(GedError, ValueError):
    """A corpus file violates its format. Carries the path and 1-based line number."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
        if line is not None:
            where = f"{where}:{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class ShapeError(GedError, ValueError):
    """Gold and predicted corpora do not line up."""


class ConfigError(GedError, ValueError):
    """Invalid configuration value."""


class CorpusIOError(GedError, OSError):
    """Reading or writing a file failed."""

    def __init__(self, message: str, path: str):
        self.path = path
        super().__init__(f"{path}: {message}")
