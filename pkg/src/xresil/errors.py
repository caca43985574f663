"""Exception hierarchy.

Every error raised by the package derives from :class:`XresilError`. The CLI
maps the three families below onto its exit codes.
"""

from __future__ import annotations


class XresilError(Exception):
    """Base class for all package errors."""


class ConfigError(XresilError):
    """Malformed or inconsistent run configuration."""


class DataError(XresilError):
    """Invalid input data or a violated domain invariant."""


class DegenerateSegment(DataError):
    def __init__(self, cable_id: str, station: str) -> None:
        super().__init__(f"segment of cable {cable_id!r} has identical endpoints {station!r}")
        self.cable_id = cable_id
        self.station = station


class RangeError(DataError):
    pass


class ParseError(DataError):
    def __init__(self, line: int, reason: str, path: str | None = None) -> None:
        where = f"{path}:{line}" if path else f"line {line}"
        super().__init__(f"{where}: {reason}")
        self.line = line
        self.reason = reason
        self.path = path


class EmptyPredictions(ParseError):
    def __init__(self, line: int, path: str | None = None) -> None:
        super().__init__(line, "record has no cable segment predictions", path)


class DuplicateStation(DataError):
    def __init__(self, station_id: str) -> None:
        super().__init__(f"duplicate landing station id {station_id!r}")
        self.station_id = station_id


class DomainError(DataError):
    pass


class UnknownId(DataError):
    def __init__(self, kind: str, ident: str) -> None:
        super().__init__(f"unknown {kind} id {ident!r}")
        self.kind = kind
        self.ident = ident


class SpecError(DataError):
    pass


class ModeMismatch(XresilError):
    pass


class InvalidMix(ConfigError):
    pass
