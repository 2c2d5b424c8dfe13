"""Physical source-line counting.

A line counts when it holds at least one character that is neither
whitespace nor part of a comment. Blank and comment-only lines do not
count; a line mixing code and a comment does.
"""

from __future__ import annotations

from .source import SourceFile


def count_sloc(source: SourceFile | str) -> int:
    text = source.text if isinstance(source, SourceFile) else source
    count = 0
    in_block = False
    in_string = False
    in_char = False
    i = 0
    n = len(text)
    line_has_code = False
    while i < n:
        ch = text[i]
        if ch == "\n":
            if line_has_code:
                count += 1
            line_has_code = False
            # strings and char literals do not span physical lines
            in_string = in_char = False
            i += 1
            continue
        if in_block:
            if ch == "*" and i + 1 < n and text[i + 1] == "/":
                in_block = False
                i += 2
                continue
            i += 1
            continue
        if in_string:
            line_has_code = True
            if ch == "\\":
                i += 2
                continue
            if ch == '"':
                in_string = False
            i += 1
            continue
        if in_char:
            line_has_code = True
            if ch == "\\":
                i += 2
                continue
            if ch == "'":
                in_char = False
            i += 1
            continue
        if ch == "/" and i + 1 < n and text[i + 1] == "*":
            in_block = True
            i += 2
            continue
        if ch == "/" and i + 1 < n and text[i + 1] == "/":
            # line comment: skip to end of line
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == '"':
            in_string = True
            line_has_code = True
            i += 1
            continue
        if ch == "'":
            in_char = True
            line_has_code = True
            i += 1
            continue
        if not ch.isspace():
            line_has_code = True
        i += 1
    if line_has_code:
        count += 1
    return count
