# core/errors.py
from __future__ import annotations

from typing import Optional


class MamError(RuntimeError):
    pass


class ConfigurationError(MamError):
    """Invalid model/sampler configuration. `key` names the offending config key, if any."""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


class DomainError(MamError, ValueError):
    pass


class DataFormatError(MamError):
    """
    Malformed input file. Carries the file path and the 1-based line number
    so the CLI can point at the offending row.
    """

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{where}{message}")
        self.path = path
        self.line = line


class SamplerError(MamError):
    pass
