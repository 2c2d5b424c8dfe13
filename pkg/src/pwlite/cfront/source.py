"""Source files, byte spans and original-coordinate mapping."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from pathlib import Path


def _line_index(text: str) -> list[int]:
    index = [0]
    for i, ch in enumerate(text):
        if ch == "\n":
            index.append(i + 1)
    return index


@dataclass(eq=False)
class SourceFile:
    """A decoded source text plus the byte offsets of its line starts.

    For preprocessed output, ``line_origins[i]`` gives the (path, 1-based
    line) that preprocessed line ``i`` came from, so diagnostics can report
    original coordinates after inlining and macro expansion.
    """

    path: str
    text: str
    line_index: list[int] = field(default_factory=list)
    line_origins: list[tuple[str, int]] | None = None

    def __post_init__(self) -> None:
        if not self.line_index:
            self.line_index = _line_index(self.text)

    @classmethod
    def from_path(cls, path: str | Path) -> "SourceFile":
        data = Path(path).read_bytes()
        return cls(path=str(path), text=data.decode("utf-8"))

    @classmethod
    def from_text(cls, text: str, path: str = "<memory>") -> "SourceFile":
        return cls(path=path, text=text)

    def line_of(self, offset: int) -> int:
        """1-based line number containing ``offset``."""
        return bisect.bisect_right(self.line_index, offset)

    def line_col(self, offset: int) -> tuple[int, int]:
        line = self.line_of(offset)
        return line, offset - self.line_index[line - 1] + 1

    def origin(self, offset: int) -> tuple[str, int]:
        """Original (path, line) for ``offset``, following the origin map."""
        line = self.line_of(offset)
        if self.line_origins is not None and 0 < line <= len(self.line_origins):
            return self.line_origins[line - 1]
        return self.path, line

    def line_text(self, line: int) -> str:
        start = self.line_index[line - 1]
        end = self.line_index[line] - 1 if line < len(self.line_index) else len(self.text)
        return self.text[start:end]

    def indent_at(self, offset: int) -> str:
        """Leading whitespace of the line containing ``offset``."""
        text = self.line_text(self.line_of(offset))
        return text[: len(text) - len(text.lstrip())]


@dataclass(frozen=True)
class Span:
    """Byte range [start, end) within one source file."""

    file: SourceFile = field(repr=False, compare=False)
    start: int = 0
    end: int = 0

    def contains(self, other: "Span") -> bool:
        return self.file is other.file and self.start <= other.start and other.end <= self.end

    @property
    def line(self) -> int:
        return self.file.line_of(self.start)

    @property
    def origin(self) -> tuple[str, int]:
        return self.file.origin(self.start)

    def text(self) -> str:
        return self.file.text[self.start:self.end]
