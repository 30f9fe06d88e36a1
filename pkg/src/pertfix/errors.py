"""Exception hierarchy shared by all pertfix modules."""

from __future__ import annotations


class PertfixError(Exception):
    """Base class for every error raised by this package."""


class DslError(PertfixError):
    """Malformed expression source; carries the character offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class LexError(DslError):
    pass


class ParseError(DslError):
    pass


class EvaluationError(PertfixError):
    """Arithmetic that would leave the finite reals, or an unbound variable."""


class ConfigError(PertfixError):
    pass


class DomainError(PertfixError):
    pass


class DomainEscapeError(DomainError):
    def __init__(self, x: float, image: float, lo: float, hi: float):
        super().__init__(f"T({x!r}) = {image!r} escapes the domain [{lo!r}, {hi!r}]")
        self.x = x
        self.image = image


class ParameterError(PertfixError):
    """A contraction constant outside the range its theorem admits."""


class EstimateError(PertfixError):
    pass


class ProbeError(PertfixError):
    def __init__(self, start: float, cause: Exception):
        super().__init__(f"run from x0={start!r} failed: {cause}")
        self.start = start
        self.cause = cause


class UnknownEntryError(PertfixError):
    def __init__(self, entry_id: str, available):
        super().__init__(
            f"unknown catalog id {entry_id!r}; available: {', '.join(available)}"
        )
        self.entry_id = entry_id
