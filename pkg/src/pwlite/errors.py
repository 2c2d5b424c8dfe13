"""Exception types and diagnostics shared across the pipeline."""

from __future__ import annotations

from dataclasses import dataclass


class PwliteError(Exception):
    """Base class for all tool errors."""


class PreprocessError(PwliteError):
    """Fatal preprocessing failure; the file is skipped, analysis continues."""

    def __init__(self, path: str, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line
        self.message = message


class UnresolvedInclude(PreprocessError):
    pass


class UnterminatedConditional(PreprocessError):
    pass


class MacroRecursion(PreprocessError):
    pass


class ParseError(PwliteError):
    """Syntax error with location and the token set the parser expected."""

    def __init__(self, path: str, line: int, col: int, message: str,
                 expected: tuple[str, ...] = ()):
        loc = f"{path}:{line}:{col}: {message}"
        if expected:
            loc += " (expected: " + ", ".join(expected) + ")"
        super().__init__(loc)
        self.path = path
        self.line = line
        self.col = col
        self.msg = message
        self.expected = expected


class NonCanonicalLoop(PwliteError):
    pass


class UninterpretableLoop(PwliteError):
    pass


class UnscopableVariable(PwliteError):
    def __init__(self, variable: str, reason: str):
        super().__init__(f"variable '{variable}' cannot be scoped: {reason}")
        self.variable = variable
        self.reason = reason


class UnsupportedPatternForTemplate(PwliteError):
    pass


class OverlappingEdits(PwliteError):
    pass


@dataclass
class Diagnostic:
    """A non-fatal note attached to a file (parse recovery, macro limits, ...)."""

    path: str
    line: int
    col: int
    message: str
    severity: str = "warning"  # warning | error

    def __str__(self) -> str:
        return f"{self.path}:{self.line}:{self.col}: {self.severity}: {self.message}"
