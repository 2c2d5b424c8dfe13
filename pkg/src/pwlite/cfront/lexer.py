"""Tokenizer for the preprocessed C subset."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import ParseError
from .source import SourceFile

KEYWORDS = frozenset(
    """auto break case char const continue default do double else enum extern
    float for goto if inline int long register restrict return short signed
    sizeof static struct switch typedef union unsigned void volatile while
    _Bool""".split()
)

# longest-match first
PUNCTUATORS = (
    "<<=", ">>=", "...",
    "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
    "(", ")", "[", "]", "{", "}", ";", ",", ".", "?", ":",
    "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">", "=",
)

_ID_RE = re.compile(r"[A-Za-z_]\w*")
_NUM_RE = re.compile(r"(?:0[xX][0-9a-fA-F]+[uUlL]*|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?[fFuUlL]*)")


@dataclass(frozen=True)
class Token:
    kind: str  # id | kw | num | str | char | punct | pragma | eof
    text: str
    start: int
    end: int


def tokenize(pp: SourceFile) -> list[Token]:
    """Token stream over preprocessed text; ``#...`` lines become pragma tokens."""
    text = pp.text
    toks: list[Token] = []
    i = 0
    n = len(text)
    at_line_start = True
    while i < n:
        ch = text[i]
        if ch == "\n":
            at_line_start = True
            i += 1
            continue
        if ch.isspace():
            i += 1
            continue
        if ch == "\\" and i + 1 < n and text[i + 1] == "\n":
            i += 2
            at_line_start = True
            continue
        if ch == "#" and at_line_start:
            end = text.find("\n", i)
            end = n if end == -1 else end
            toks.append(Token("pragma", text[i:end].rstrip(), i, end))
            i = end
            continue
        at_line_start = False
        if ch.isalpha() or ch == "_":
            m = _ID_RE.match(text, i)
            word = m.group()
            toks.append(Token("kw" if word in KEYWORDS else "id", word, i, m.end()))
            i = m.end()
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            m = _NUM_RE.match(text, i)
            if not m:
                line, col = pp.line_col(i)
                raise ParseError(pp.path, line, col, f"bad numeric literal at {text[i:i+8]!r}")
            toks.append(Token("num", m.group(), i, m.end()))
            i = m.end()
            continue
        if ch == '"' or ch == "'":
            quote = ch
            j = i + 1
            while j < n and text[j] != quote:
                if text[j] == "\\":
                    j += 1
                if text[j] == "\n":
                    break
                j += 1
            if j >= n or text[j] != quote:
                line, col = pp.line_col(i)
                raise ParseError(pp.path, line, col, "unterminated literal")
            kind = "str" if quote == '"' else "char"
            toks.append(Token(kind, text[i:j + 1], i, j + 1))
            i = j + 1
            continue
        for p in PUNCTUATORS:
            if text.startswith(p, i):
                toks.append(Token("punct", p, i, i + len(p)))
                i += len(p)
                break
        else:
            line, col = pp.line_col(i)
            raise ParseError(pp.path, line, col, f"unexpected character {ch!r}")
    toks.append(Token("eof", "", n, n))
    return toks
