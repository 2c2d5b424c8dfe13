"""Built-in preprocessor: comment stripping, conditionals, macros, includes.

Diagnostics keep original coordinates: comment stripping and macro
expansion never change the line count of a file, and inlined headers are
tracked through a per-line origin map. System headers (``<...>``) are
resolved against a stub-header sysroot instead of the real system.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from ..errors import (Diagnostic, MacroRecursion, PreprocessError,
                      UnresolvedInclude, UnterminatedConditional)
from .source import SourceFile

PURE_MARKER = "/*@pure@*/"
PURE_ATTR = "__attribute__((pure))"

_INCLUDE_DEPTH_LIMIT = 64

_WORD_RE = re.compile(r"[A-Za-z_]\w*")
_DIRECTIVE_RE = re.compile(r"^\s*#\s*(\w+)\s*(.*)$", re.S)


def strip_comments(text: str) -> str:
    """Blank out comments with spaces, preserving line structure.

    ``/*@pure@*/`` markers are rewritten to ``__attribute__((pure))`` so a
    purity annotation survives stripping (recognized pre-stripping).
    """
    out: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "/" and i + 1 < n and text[i + 1] == "*":
            end = text.find("*/", i + 2)
            if end == -1:
                # malformed terminator: rest of file is comment
                out.append("".join("\n" if c == "\n" else " " for c in text[i:]))
                break
            chunk = text[i:end + 2]
            if chunk == PURE_MARKER:
                out.append(PURE_ATTR)
            else:
                out.append("".join("\n" if c == "\n" else " " for c in chunk))
            i = end + 2
            continue
        if ch == "/" and i + 1 < n and text[i + 1] == "/":
            end = text.find("\n", i)
            end = n if end == -1 else end
            out.append(" " * (end - i))
            i = end
            continue
        if ch == '"' or ch == "'":
            quote = ch
            j = i + 1
            while j < n and text[j] != quote and text[j] != "\n":
                if text[j] == "\\":
                    j += 1
                j += 1
            j = min(j + 1, n)
            out.append(text[i:j])
            i = j
            continue
        out.append(ch)
        i += 1
    return "".join(out)


@dataclass
class Macro:
    name: str
    params: list[str] | None  # None for object-like
    body: str


class _CondFrame:
    __slots__ = ("active", "taken", "parent_active", "line")

    def __init__(self, active: bool, parent_active: bool, line: int):
        self.active = active
        self.taken = active
        self.parent_active = parent_active
        self.line = line


class Preprocessor:
    def __init__(self, include_paths=(), defines=(), sysroot=None,
                 diagnostics: list[Diagnostic] | None = None):
        self.include_paths = [Path(p) for p in include_paths]
        self.sysroot = Path(sysroot) if sysroot else None
        self.diagnostics = diagnostics if diagnostics is not None else []
        self.macros: dict[str, Macro] = {}
        for d in defines:
            name, _, value = d.partition("=")
            self.macros[name.strip()] = Macro(name.strip(), None, value.strip() or "1")

    # -- public ---------------------------------------------------------

    def run(self, source: SourceFile) -> SourceFile:
        lines, origins = self._process(source, include_stack=[])
        text = "\n".join(lines)
        if source.text.endswith("\n") or not source.text:
            text += "\n" if lines else ""
        return SourceFile(path=source.path, text=text, line_origins=origins)

    # -- file processing --------------------------------------------------

    def _process(self, sf: SourceFile, include_stack: list[str]):
        if len(include_stack) > _INCLUDE_DEPTH_LIMIT:
            raise UnresolvedInclude(sf.path, 1, "include nesting too deep")
        stripped = strip_comments(sf.text)
        raw = stripped.split("\n")
        if raw and raw[-1] == "":
            raw.pop()
        out_lines: list[str] = []
        origins: list[tuple[str, int]] = []
        cond_stack: list[_CondFrame] = []
        i = 0
        while i < len(raw):
            lineno = i + 1
            line = raw[i]
            blanks_after = 0
            if line.lstrip().startswith("#"):
                # splice directive continuations, blanking consumed lines
                while line.rstrip().endswith("\\") and i + 1 < len(raw):
                    line = line.rstrip()[:-1] + " " + raw[i + 1]
                    i += 1
                    blanks_after += 1
                emitted = self._directive(sf, lineno, line, cond_stack,
                                          include_stack, out_lines, origins)
                if emitted is not None:
                    out_lines.append(emitted)
                    origins.append((sf.path, lineno))
                for k in range(blanks_after):
                    out_lines.append("")
                    origins.append((sf.path, lineno + 1 + k))
            else:
                active = not cond_stack or cond_stack[-1].active
                if active:
                    out_lines.append(self._expand(sf, lineno, line))
                else:
                    out_lines.append("")
                origins.append((sf.path, lineno))
            i += 1
        if cond_stack:
            raise UnterminatedConditional(sf.path, cond_stack[-1].line,
                                          "unterminated #if/#ifdef")
        return out_lines, origins

    def _directive(self, sf, lineno, line, cond_stack, include_stack,
                   out_lines, origins):
        """Handle one directive line. Returns replacement text or None when
        the directive produced its own output (includes)."""
        m = _DIRECTIVE_RE.match(line)
        if not m:
            return ""
        name, rest = m.group(1), m.group(2).strip()
        active = not cond_stack or cond_stack[-1].active

        if name in ("ifdef", "ifndef"):
            defined = rest.split()[0] in self.macros if rest.split() else False
            cond = defined if name == "ifdef" else not defined
            cond_stack.append(_CondFrame(active and cond, active, lineno))
            return ""
        if name == "if":
            cond = bool(self._eval_condition(sf, lineno, rest)) if active else False
            cond_stack.append(_CondFrame(active and cond, active, lineno))
            return ""
        if name == "elif":
            if not cond_stack:
                raise PreprocessError(sf.path, lineno, "#elif without #if")
            frame = cond_stack[-1]
            if frame.parent_active and not frame.taken:
                cond = bool(self._eval_condition(sf, lineno, rest))
                frame.active = cond
                frame.taken = frame.taken or cond
            else:
                frame.active = False
            return ""
        if name == "else":
            if not cond_stack:
                raise PreprocessError(sf.path, lineno, "#else without #if")
            frame = cond_stack[-1]
            frame.active = frame.parent_active and not frame.taken
            frame.taken = True
            return ""
        if name == "endif":
            if not cond_stack:
                raise PreprocessError(sf.path, lineno, "#endif without #if")
            cond_stack.pop()
            return ""

        if not active:
            return ""

        if name == "define":
            self._define(sf, lineno, rest)
            return ""
        if name == "undef":
            word = rest.split()[0] if rest.split() else ""
            self.macros.pop(word, None)
            return ""
        if name == "include":
            self._include(sf, lineno, rest, include_stack, out_lines, origins)
            return None
        if name == "pragma":
            return line  # kept verbatim, no macro expansion
        if name == "error":
            raise PreprocessError(sf.path, lineno, f"#error {rest}")
        self.diagnostics.append(Diagnostic(sf.path, lineno, 1,
                                           f"ignored directive #{name}"))
        return ""

    # -- defines ----------------------------------------------------------

    def _define(self, sf, lineno, rest):
        m = _WORD_RE.match(rest)
        if not m:
            self.diagnostics.append(Diagnostic(sf.path, lineno, 1, "malformed #define"))
            return
        name = m.group()
        after = rest[m.end():]
        if after.startswith("("):
            close = after.find(")")
            if close == -1:
                self.diagnostics.append(Diagnostic(sf.path, lineno, 1, "malformed macro parameter list"))
                return
            params = [p.strip() for p in after[1:close].split(",") if p.strip()]
            body = after[close + 1:].strip()
            if "#" in body:
                # stringize/paste are out: report UnsupportedMacro, file partial
                self.diagnostics.append(Diagnostic(
                    sf.path, lineno, 1,
                    f"UnsupportedMacro: '{name}' uses #/## operators", "error"))
                return
            if any(p == "..." for p in params):
                self.diagnostics.append(Diagnostic(
                    sf.path, lineno, 1,
                    f"UnsupportedMacro: '{name}' is variadic", "error"))
                return
            self.macros[name] = Macro(name, params, body)
        else:
            self.macros[name] = Macro(name, None, after.strip())

    # -- includes ---------------------------------------------------------

    def _include(self, sf, lineno, rest, include_stack, out_lines, origins):
        m = re.match(r'"([^"]+)"|<([^>]+)>', rest)
        if not m:
            self.diagnostics.append(Diagnostic(sf.path, lineno, 1,
                                               f"unsupported include form: {rest}"))
            return
        local, system = m.group(1), m.group(2)
        if local:
            candidates = [Path(sf.path).parent / local]
            candidates += [p / local for p in self.include_paths]
            target = next((c for c in candidates if c.is_file()), None)
            if target is None:
                raise UnresolvedInclude(sf.path, lineno, f'header "{local}" not found')
        else:
            target = self.sysroot / system if self.sysroot else None
            if target is None or not target.is_file():
                self.diagnostics.append(Diagnostic(
                    sf.path, lineno, 1,
                    f"system header <{system}> has no stub; declarations unavailable"))
                return
        inc = SourceFile.from_path(target)
        include_stack.append(str(target))
        lines, incorigins = self._process(inc, include_stack)
        include_stack.pop()
        out_lines.extend(lines)
        origins.extend(incorigins)

    # -- macro expansion ----------------------------------------------------

    def _expand(self, sf, lineno, text: str, active: frozenset[str] = frozenset()) -> str:
        out: list[str] = []
        i = 0
        n = len(text)
        while i < n:
            ch = text[i]
            if ch == '"' or ch == "'":
                j = i + 1
                while j < n and text[j] != ch:
                    if text[j] == "\\":
                        j += 1
                    j += 1
                j = min(j + 1, n)
                out.append(text[i:j])
                i = j
                continue
            if ch.isalpha() or ch == "_":
                m = _WORD_RE.match(text, i)
                word = m.group()
                i = m.end()
                macro = self.macros.get(word)
                if macro is None:
                    out.append(word)
                    continue
                if word in active:
                    raise MacroRecursion(sf.path, lineno,
                                         f"self-referential macro '{word}'")
                if macro.params is None:
                    out.append(self._expand(sf, lineno, macro.body, active | {word}))
                    continue
                # function-like: requires an argument list, else plain id
                k = i
                while k < n and text[k].isspace():
                    k += 1
                if k >= n or text[k] != "(":
                    out.append(word)
                    continue
                args, i = self._macro_args(sf, lineno, text, k)
                if len(args) != len(macro.params) and not (len(macro.params) == 0 and args == [""]):
                    self.diagnostics.append(Diagnostic(
                        sf.path, lineno, 1,
                        f"macro '{word}' expects {len(macro.params)} arguments, got {len(args)}"))
                    out.append(word)
                    continue
                body = self._substitute(macro, args)
                out.append(self._expand(sf, lineno, body, active | {word}))
                continue
            out.append(ch)
            i += 1
        return "".join(out)

    @staticmethod
    def _macro_args(sf, lineno, text, open_paren):
        depth = 0
        args: list[str] = []
        current: list[str] = []
        i = open_paren
        n = len(text)
        while i < n:
            ch = text[i]
            if ch == "(":
                depth += 1
                if depth > 1:
                    current.append(ch)
            elif ch == ")":
                depth -= 1
                if depth == 0:
                    args.append("".join(current).strip())
                    return args, i + 1
                current.append(ch)
            elif ch == "," and depth == 1:
                args.append("".join(current).strip())
                current = []
            else:
                current.append(ch)
            i += 1
        raise PreprocessError(sf.path, lineno, "unterminated macro argument list")

    @staticmethod
    def _substitute(macro: Macro, args: list[str]) -> str:
        mapping = dict(zip(macro.params or [], args))
        out = []
        i = 0
        body = macro.body
        while i < len(body):
            m = _WORD_RE.match(body, i)
            if m:
                out.append(mapping.get(m.group(), m.group()))
                i = m.end()
            else:
                out.append(body[i])
                i += 1
        return "".join(out)

    # -- #if expression evaluation ----------------------------------------

    def _eval_condition(self, sf, lineno, rest: str) -> int:
        rest = re.sub(r"defined\s*\(\s*(\w+)\s*\)",
                      lambda m: "1" if m.group(1) in self.macros else "0", rest)
        rest = re.sub(r"defined\s+(\w+)",
                      lambda m: "1" if m.group(1) in self.macros else "0", rest)
        expanded = self._expand(sf, lineno, rest)
        try:
            return _CondEval(expanded).parse()
        except (ValueError, ZeroDivisionError):
            self.diagnostics.append(Diagnostic(sf.path, lineno, 1,
                                               f"cannot evaluate #if condition: {rest.strip()}"))
            return 0


class _CondEval:
    """Integer constant-expression evaluator for #if conditions."""

    _TOKEN_RE = re.compile(
        r"\s*(0[xX][0-9a-fA-F]+|\d+|[A-Za-z_]\w*|<<|>>|<=|>=|==|!=|&&|\|\||[-+*/%()<>!~&|^?:])")

    def __init__(self, text: str):
        self.toks: list[str] = []
        pos = 0
        while pos < len(text):
            m = self._TOKEN_RE.match(text, pos)
            if not m:
                if text[pos:].strip():
                    raise ValueError(f"bad token in condition: {text[pos:]!r}")
                break
            self.toks.append(m.group(1))
            pos = m.end()
        self.i = 0

    def parse(self) -> int:
        value = self._ternary()
        if self.i != len(self.toks):
            raise ValueError("trailing tokens in condition")
        return value

    def _peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def _next(self):
        tok = self._peek()
        self.i += 1
        return tok

    def _ternary(self) -> int:
        cond = self._binary(0)
        if self._peek() == "?":
            self._next()
            a = self._ternary()
            if self._next() != ":":
                raise ValueError("expected ':'")
            b = self._ternary()
            return a if cond else b
        return cond

    _LEVELS = [["||"], ["&&"], ["|"], ["^"], ["&"], ["==", "!="],
               ["<", "<=", ">", ">="], ["<<", ">>"], ["+", "-"], ["*", "/", "%"]]

    def _binary(self, level: int) -> int:
        if level == len(self._LEVELS):
            return self._unary()
        lhs = self._binary(level + 1)
        while self._peek() in self._LEVELS[level]:
            op = self._next()
            rhs = self._binary(level + 1)
            lhs = self._apply(op, lhs, rhs)
        return lhs

    @staticmethod
    def _apply(op, a, b) -> int:
        table = {
            "||": lambda: int(bool(a) or bool(b)), "&&": lambda: int(bool(a) and bool(b)),
            "|": lambda: a | b, "^": lambda: a ^ b, "&": lambda: a & b,
            "==": lambda: int(a == b), "!=": lambda: int(a != b),
            "<": lambda: int(a < b), "<=": lambda: int(a <= b),
            ">": lambda: int(a > b), ">=": lambda: int(a >= b),
            "<<": lambda: a << b, ">>": lambda: a >> b,
            "+": lambda: a + b, "-": lambda: a - b,
            "*": lambda: a * b, "/": lambda: int(a / b), "%": lambda: a - b * int(a / b),
        }
        return table[op]()

    def _unary(self) -> int:
        tok = self._peek()
        if tok in ("!", "~", "-", "+"):
            self._next()
            value = self._unary()
            return {"!": lambda: int(not value), "~": lambda: ~value,
                    "-": lambda: -value, "+": lambda: value}[tok]()
        return self._primary()

    def _primary(self) -> int:
        tok = self._next()
        if tok is None:
            raise ValueError("unexpected end of condition")
        if tok == "(":
            value = self._ternary()
            if self._next() != ")":
                raise ValueError("expected ')'")
            return value
        if tok.isdigit() or tok.startswith(("0x", "0X")):
            return int(tok, 0)
        if _WORD_RE.fullmatch(tok):
            return 0  # undefined identifiers evaluate to 0
        raise ValueError(f"unexpected token {tok!r}")


def preprocess(source: SourceFile, include_paths=(), defines=(), sysroot=None,
               diagnostics: list[Diagnostic] | None = None) -> SourceFile:
    """Preprocess ``source``; fatal problems raise PreprocessError subclasses."""
    return Preprocessor(include_paths, defines, sysroot, diagnostics).run(source)
