"""Exception hierarchy. The CLI maps InputError to exit 1, BackendError to exit 2."""

from __future__ import annotations


class DeidError(Exception):
    pass


class InputError(DeidError):
    """Bad input file or record. Carries the file path and 1-based line when known."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)


class ConfigError(InputError):
    pass


class BackendError(DeidError):
    pass


class BackendStartError(BackendError):
    pass


class ProtocolError(BackendError):
    pass


class BackendTimeout(BackendError):
    pass
