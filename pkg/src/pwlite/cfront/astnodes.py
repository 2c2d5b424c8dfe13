"""AST node and OpenMP directive representations."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .source import Span

# statement kinds that own nested statements
STMT_KINDS = frozenset({
    "CompoundStmt", "ForStmt", "WhileStmt", "DoWhileStmt", "IfStmt",
    "SwitchStmt", "ExprStmt", "ReturnStmt", "BreakStmt", "ContinueStmt",
    "EmptyStmt", "OmpPragma", "LabelStmt", "CaseLabel", "OpaqueStmt",
    "Declaration",
})


@dataclass
class Declarator:
    """One declared entity: name plus the shape its declarator spells."""

    name: str | None
    type_shape: str  # scalar | array | pointer | struct | function | unknown
    rank: int = 0
    base_type: str = "int"
    span: Span | None = None
    variadic: bool = False


@dataclass(eq=False)
class AstNode:
    kind: str
    span: Span
    children: list["AstNode"] = field(default_factory=list)
    name: str | None = None          # Identifier / FunctionDef / LabelStmt
    op: str | None = None            # BinaryExpr / UnaryExpr / AssignExpr / ...
    value: str | None = None         # Literal token text
    directive: "OmpDirective | None" = None  # OmpPragma
    declarators: list[Declarator] | None = None  # Declaration / Typedef
    params: list[Declarator] | None = None       # FunctionDef
    storage: str | None = None       # static | extern | typedef
    opaque: bool = False             # FunctionDef: body uses unsupported constructs
    pure_attr: bool = False          # FunctionDef carries a purity annotation

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()

    def find_all(self, kind: str):
        return [n for n in self.walk() if n.kind == kind]

    def __repr__(self) -> str:  # compact, used in test failures
        extra = self.name or self.op or self.value or ""
        return f"<{self.kind} {extra}".rstrip() + f" @{self.span.start}..{self.span.end}>"


# directives that attach to the following statement
ATTACHING_DIRECTIVES = frozenset({
    "parallel", "for", "parallel_for", "single", "task", "taskloop", "simd",
    "critical", "master", "sections", "section", "atomic", "ordered",
})

DATA_SHARING_CLAUSES = ("shared", "private", "firstprivate", "lastprivate",
                        "reduction")


@dataclass
class OmpDirective:
    """Parsed ``#pragma omp`` directive with its clause list."""

    directive: str
    clauses: list[tuple[str, list[str]]] = field(default_factory=list)
    attached_stmt: AstNode | None = None

    def clause(self, name: str) -> list[str] | None:
        for cname, args in self.clauses:
            if cname == name:
                return args
        return None

    def has_clause(self, name: str, args: list[str] | None = None) -> bool:
        for cname, cargs in self.clauses:
            if cname == name and (args is None or cargs == args):
                return True
        return False

    def data_sharing_names(self) -> set[str]:
        """Variables explicitly scoped by this directive's clauses."""
        names: set[str] = set()
        for cname, args in self.clauses:
            if cname == "reduction":
                names.update(args[1:])
            elif cname in DATA_SHARING_CLAUSES:
                names.update(args)
        return names

    def render(self) -> str:
        parts = ["#pragma omp", self.directive.replace("_", " ")]
        for cname, args in self.clauses:
            if not args:
                parts.append(cname)
            elif cname == "reduction":
                parts.append(f"{cname}({args[0]}: {', '.join(args[1:])})")
            else:
                parts.append(f"{cname}({', '.join(args)})")
        return " ".join(parts)


_CLAUSE_RE = re.compile(r"([A-Za-z_]\w*)\s*(\()?")


def parse_omp_directive(text: str) -> OmpDirective | None:
    """Parse the text of a ``#pragma`` line; None when it is not ``omp``."""
    m = re.match(r"\s*#\s*pragma\s+(\w+)\s*(.*)$", text, re.S)
    if not m or m.group(1) != "omp":
        return None
    rest = m.group(2).strip()
    m = re.match(r"(\w+)\s*", rest)
    if not m:
        return None
    directive = m.group(1)
    rest = rest[m.end():]
    if directive == "parallel":
        m2 = re.match(r"(for|sections)\s*", rest)
        if m2:
            directive = f"parallel_{m2.group(1)}"
            rest = rest[m2.end():]
    clauses: list[tuple[str, list[str]]] = []
    pos = 0
    while pos < len(rest):
        m = _CLAUSE_RE.match(rest, pos)
        if not m:
            pos += 1
            continue
        cname = m.group(1)
        pos = m.end()
        if not m.group(2):
            clauses.append((cname, []))
            continue
        depth = 1
        start = pos
        while pos < len(rest) and depth:
            if rest[pos] == "(":
                depth += 1
            elif rest[pos] == ")":
                depth -= 1
            pos += 1
        body = rest[start:pos - 1]
        if cname == "reduction":
            op, _, vars_part = body.partition(":")
            args = [op.strip()] + [v.strip() for v in vars_part.split(",") if v.strip()]
        else:
            args = [a.strip() for a in body.split(",") if a.strip()]
        clauses.append((cname, args))
    return OmpDirective(directive=directive, clauses=clauses)
