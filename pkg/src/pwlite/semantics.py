"""Scoped symbol tables, per-statement def-use sets, and purity analysis."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .cfront.astnodes import AstNode, Declarator
from .cfront.source import Span
from .errors import Diagnostic

# functions considered I/O by default; overridable via --io-functions
DEFAULT_IO_FUNCTIONS = frozenset(
    "printf fprintf scanf fopen fwrite fread exit".split())

_uid_counter = itertools.count(1)


@dataclass(eq=False)
class Symbol:
    name: str
    storage: str  # global | static_file | static_local | local | parameter | enum_const
    declared_scope: "Scope | None"
    type_shape: str  # scalar | array | pointer | struct | function | unknown
    rank: int = 0
    decl_span: Span | None = None
    unresolved: bool = False

    def __post_init__(self) -> None:
        self.uid = next(_uid_counter)

    def __repr__(self) -> str:
        return f"<Symbol {self.name} {self.storage}/{self.type_shape}>"

    @property
    def indexable(self) -> bool:
        return self.type_shape in ("array", "pointer")


@dataclass(eq=False)
class Scope:
    kind: str  # file | function | block | loop_body
    parent: "Scope | None" = None
    span: Span | None = None
    symbols: list[Symbol] = field(default_factory=list)
    children: list["Scope"] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.parent is not None:
            self.parent.children.append(self)

    def declare(self, sym: Symbol) -> None:
        self.symbols.append(sym)
        sym.declared_scope = self

    def find_local(self, name: str) -> Symbol | None:
        for sym in self.symbols:
            if sym.name == name:
                return sym
        return None

    def lookup(self, name: str) -> Symbol | None:
        scope: Scope | None = self
        while scope is not None:
            sym = scope.find_local(name)
            if sym is not None:
                return sym
            scope = scope.parent
        return None

    def is_ancestor_of(self, other: "Scope") -> bool:
        scope: Scope | None = other
        while scope is not None:
            if scope is self:
                return True
            scope = scope.parent
        return False


class ScopedSymbolTable:
    """Resolution results for one translation unit."""

    def __init__(self, file_scope: Scope):
        self.file_scope = file_scope
        self.resolutions: dict[AstNode, Symbol] = {}
        self.scope_of_node: dict[AstNode, Scope] = {}
        self.decl_symbols: dict[int, Symbol] = {}  # id(Declarator) -> Symbol
        self.functions: dict[str, AstNode] = {}
        self.diagnostics: list[Diagnostic] = []
        self._unresolved: dict[str, Symbol] = {}

    def resolve(self, node: AstNode) -> Symbol | None:
        return self.resolutions.get(node)

    def unresolved_symbol(self, name: str) -> Symbol:
        sym = self._unresolved.get(name)
        if sym is None:
            sym = Symbol(name, "global", self.file_scope, "unknown", unresolved=True)
            self._unresolved[name] = sym
        return sym


def _shape_of(decl: Declarator) -> tuple[str, int]:
    return decl.type_shape, decl.rank


class _TableBuilder:
    def __init__(self, tu: AstNode):
        self.tu = tu
        self.file_scope = Scope("file", span=tu.span)
        self.table = ScopedSymbolTable(self.file_scope)

    def build(self) -> ScopedSymbolTable:
        for name in sorted(getattr(self.tu, "enum_constants", ())):
            self.file_scope.declare(Symbol(name, "enum_const", self.file_scope, "scalar"))
        for child in self.tu.children:
            if child.kind == "Declaration":
                self._declare_file_level(child)
            elif child.kind == "FunctionDef":
                self._declare_function(child)
        for child in self.tu.children:
            if child.kind == "FunctionDef":
                self._walk_function(child)
            elif child.kind == "Declaration":
                for init in child.children:
                    self._resolve_expr(init, self.file_scope)
        return self.table

    def _declare_file_level(self, node: AstNode) -> None:
        storage = "static_file" if node.storage == "static" else "global"
        for decl in node.declarators or []:
            if decl.name is None:
                continue
            shape, rank = _shape_of(decl)
            existing = self.file_scope.find_local(decl.name)
            if existing is not None:
                # prototypes and extern re-declarations merge silently
                if existing.type_shape != shape and existing.type_shape == "unknown":
                    existing.type_shape = shape
                    existing.rank = rank
                self.table.decl_symbols[id(decl)] = existing
                continue
            sym = Symbol(decl.name, storage, self.file_scope, shape, rank, decl.span)
            self.file_scope.declare(sym)
            self.table.decl_symbols[id(decl)] = sym

    def _declare_function(self, node: AstNode) -> None:
        if node.name is None:
            return
        existing = self.file_scope.find_local(node.name)
        if existing is None:
            self.file_scope.declare(Symbol(node.name, "global", self.file_scope,
                                           "function", 0, node.span))
        self.table.functions[node.name] = node

    def _walk_function(self, fn: AstNode) -> None:
        scope = Scope("function", self.file_scope, fn.span)
        self.table.scope_of_node[fn] = scope
        for param in fn.params or []:
            if param.name is None:
                continue
            shape, rank = _shape_of(param)
            sym = Symbol(param.name, "parameter", scope, shape, rank, param.span)
            scope.declare(sym)
            self.table.decl_symbols[id(param)] = sym
        body = fn.children[0] if fn.children else None
        if body is not None:
            self._walk_stmt(body, scope)

    def _walk_stmt(self, node: AstNode, scope: Scope) -> None:
        kind = node.kind
        if kind == "CompoundStmt":
            inner = Scope("block", scope, node.span)
            self.table.scope_of_node[node] = inner
            for child in node.children:
                self._walk_stmt(child, inner)
            return
        if kind == "ForStmt":
            loop_scope = Scope("loop_body", scope, node.span)
            self.table.scope_of_node[node] = loop_scope
            init, cond, incr, body = node.children
            self._walk_stmt(init, loop_scope)
            self._resolve_expr(cond, loop_scope)
            self._resolve_expr(incr, loop_scope)
            self._walk_stmt(body, loop_scope)
            return
        if kind == "Declaration":
            storage = "static_local" if node.storage == "static" else "local"
            for decl, init in zip(node.declarators or [], node.children):
                if decl.name is not None:
                    shape, rank = _shape_of(decl)
                    existing = scope.find_local(decl.name)
                    if existing is not None:
                        line, col = node.span.file.line_col(node.span.start)
                        self.table.diagnostics.append(Diagnostic(
                            node.span.file.path, line, col,
                            f"duplicate declaration of '{decl.name}'"))
                        self.table.decl_symbols[id(decl)] = existing
                    else:
                        sym = Symbol(decl.name, storage, scope, shape, rank,
                                     decl.span)
                        scope.declare(sym)
                        self.table.decl_symbols[id(decl)] = sym
                self._resolve_expr(init, scope)
            return
        if kind in ("WhileStmt", "DoWhileStmt", "IfStmt", "SwitchStmt"):
            for child in node.children:
                if child.kind in ("CompoundStmt", "ForStmt", "WhileStmt",
                                  "DoWhileStmt", "IfStmt", "SwitchStmt",
                                  "ExprStmt", "ReturnStmt", "Declaration",
                                  "OmpPragma", "LabelStmt", "EmptyStmt",
                                  "BreakStmt", "ContinueStmt", "CaseLabel",
                                  "OpaqueStmt"):
                    self._walk_stmt(child, scope)
                else:
                    self._resolve_expr(child, scope)
            return
        if kind in ("ExprStmt", "ReturnStmt", "CaseLabel"):
            for child in node.children:
                self._resolve_expr(child, scope)
            return
        if kind in ("OmpPragma", "LabelStmt"):
            for child in node.children:
                self._walk_stmt(child, scope)
            return
        if kind in ("EmptyStmt", "BreakStmt", "ContinueStmt", "OpaqueStmt",
                    "Typedef", "Empty"):
            return
        self._resolve_expr(node, scope)

    def _resolve_expr(self, node: AstNode, scope: Scope) -> None:
        if node.kind == "Identifier":
            sym = scope.lookup(node.name)
            if sym is None:
                sym = self.table.unresolved_symbol(node.name)
            self.table.resolutions[node] = sym
            return
        for child in node.children:
            self._resolve_expr(child, scope)


def build_symbol_table(tu: AstNode) -> ScopedSymbolTable:
    """Resolve every Identifier to a Symbol (or a synthetic unresolved one)."""
    return _TableBuilder(tu).build()


# -- def-use ----------------------------------------------------------------

@dataclass(frozen=True)
class Whole:
    def __repr__(self) -> str:
        return "whole"


@dataclass(frozen=True)
class LinExpr:
    """Affine form: sum(coeff * symbol) + const, terms sorted by symbol uid."""

    terms: tuple[tuple[Symbol, int], ...] = ()
    const: int = 0

    @classmethod
    def constant(cls, value: int) -> "LinExpr":
        return cls((), value)

    @classmethod
    def variable(cls, sym: Symbol) -> "LinExpr":
        return cls(((sym, 1),), 0)

    def _combine(self, other: "LinExpr", sign: int) -> "LinExpr":
        coeffs: dict[Symbol, int] = dict(self.terms)
        for sym, c in other.terms:
            coeffs[sym] = coeffs.get(sym, 0) + sign * c
        terms = tuple(sorted(((s, c) for s, c in coeffs.items() if c),
                             key=lambda t: t[0].uid))
        return LinExpr(terms, self.const + sign * other.const)

    def __add__(self, other: "LinExpr") -> "LinExpr":
        return self._combine(other, 1)

    def __sub__(self, other: "LinExpr") -> "LinExpr":
        return self._combine(other, -1)

    def scaled(self, factor: int) -> "LinExpr":
        return LinExpr(tuple((s, c * factor) for s, c in self.terms),
                       self.const * factor)

    def coeff(self, sym: Symbol) -> int:
        for s, c in self.terms:
            if s is sym:
                return c
        return 0

    def drop(self, sym: Symbol) -> "LinExpr":
        return LinExpr(tuple((s, c) for s, c in self.terms if s is not sym),
                       self.const)

    def variables(self) -> tuple[Symbol, ...]:
        return tuple(s for s, _ in self.terms)

    def __repr__(self) -> str:
        parts = [f"{c}*{s.name}" for s, c in self.terms]
        parts.append(str(self.const))
        return "+".join(parts)


@dataclass(frozen=True)
class Affine:
    dims: tuple[LinExpr, ...]

    def __repr__(self) -> str:
        return "[" + "][".join(repr(d) for d in self.dims) + "]"


@dataclass(frozen=True)
class Indirect:
    index_array: Symbol

    def __repr__(self) -> str:
        return f"indirect({self.index_array.name})"


@dataclass(frozen=True)
class Unknown:
    def __repr__(self) -> str:
        return "unknown"


WHOLE = Whole()
UNKNOWN = Unknown()


@dataclass(frozen=True)
class Access:
    symbol: Symbol
    form: Whole | Affine | Indirect | Unknown

    def __repr__(self) -> str:
        return f"{self.symbol.name}:{self.form!r}"


@dataclass
class StmtAccess:
    reads: set[Access] = field(default_factory=set)
    writes: set[Access] = field(default_factory=set)
    calls: list[str] = field(default_factory=list)


class DefUseInfo:
    """Per-statement conservative read/write/call sets for one function."""

    def __init__(self, fn: AstNode):
        self.fn = fn
        self.stmts: dict[AstNode, StmtAccess] = {}

    def subtree(self, node: AstNode) -> StmtAccess:
        total = StmtAccess()
        for n in node.walk():
            acc = self.stmts.get(n)
            if acc is not None:
                total.reads |= acc.reads
                total.writes |= acc.writes
                total.calls.extend(acc.calls)
        return total

    def statements_under(self, node: AstNode):
        for n in node.walk():
            if n in self.stmts:
                yield n, self.stmts[n]


_STMT_EXPR_KINDS = frozenset({"ExprStmt", "ReturnStmt", "Declaration", "CaseLabel"})


class _DefUseBuilder:
    def __init__(self, fn: AstNode, table: ScopedSymbolTable):
        self.fn = fn
        self.table = table
        self.info = DefUseInfo(fn)

    def build(self) -> DefUseInfo:
        body = self.fn.children[0] if self.fn.children else None
        if body is not None:
            self._stmt(body)
        return self.info

    def _stmt(self, node: AstNode) -> None:
        kind = node.kind
        if kind in _STMT_EXPR_KINDS:
            acc = StmtAccess()
            if kind == "Declaration":
                for decl, init in zip(node.declarators or [], node.children):
                    if init.kind in ("Empty", "EmptyStmt"):
                        continue
                    self._expr(init, acc, write=False)
                    sym = self.table.decl_symbols.get(id(decl))
                    if sym is not None:
                        acc.writes.add(Access(sym, WHOLE))
            else:
                for child in node.children:
                    self._expr(child, acc, write=False)
            self.info.stmts[node] = acc
            return
        if kind == "ForStmt":
            init, cond, incr, body = node.children
            if init.kind in _STMT_EXPR_KINDS:
                self._stmt(init)
            acc = StmtAccess()
            self._expr(cond, acc, write=False)
            self._expr(incr, acc, write=False)
            self.info.stmts[node] = acc
            self._stmt(body)
            return
        if kind in ("WhileStmt", "DoWhileStmt", "IfStmt", "SwitchStmt"):
            acc = StmtAccess()
            bodies = []
            for child in node.children:
                if child.kind in ("CompoundStmt", "ForStmt", "WhileStmt",
                                  "DoWhileStmt", "IfStmt", "SwitchStmt",
                                  "ExprStmt", "ReturnStmt", "Declaration",
                                  "OmpPragma", "LabelStmt", "EmptyStmt",
                                  "BreakStmt", "ContinueStmt", "CaseLabel",
                                  "OpaqueStmt"):
                    bodies.append(child)
                else:
                    self._expr(child, acc, write=False)
            self.info.stmts[node] = acc
            for child in bodies:
                self._stmt(child)
            return
        if kind in ("CompoundStmt", "OmpPragma", "LabelStmt"):
            for child in node.children:
                self._stmt(child)
            return
        # EmptyStmt, BreakStmt, ContinueStmt, OpaqueStmt, Typedef, Empty
        return

    # -- expressions ------------------------------------------------------

    def _expr(self, node: AstNode, acc: StmtAccess, write: bool) -> None:
        kind = node.kind
        if kind in ("Empty", "EmptyStmt", "Literal", "StringLiteral", "SizeofExpr"):
            return
        if kind == "Identifier":
            sym = self.table.resolve(node)
            if sym is None or sym.storage == "enum_const" or sym.type_shape == "function":
                return
            access = Access(sym, WHOLE)
            (acc.writes if write else acc.reads).add(access)
            return
        if kind == "AssignExpr":
            lhs, rhs = node.children
            self._expr(rhs, acc, write=False)
            self._lvalue(lhs, acc, also_read=(node.op != "="))
            return
        if kind in ("UnaryExpr", "PostfixExpr") and node.op in ("++", "--"):
            self._lvalue(node.children[0], acc, also_read=True)
            return
        if kind == "UnaryExpr" and node.op == "*":
            self._deref_access(node, acc, write=write)
            return
        if kind == "ArraySubscript":
            self._subscript_access(node, acc, write=write)
            return
        if kind == "MemberExpr":
            self._member_access(node, acc, write=write)
            return
        if kind == "CallExpr":
            callee = node.children[0]
            if callee.kind == "Identifier":
                acc.calls.append(callee.name)
            else:
                self._expr(callee, acc, write=False)
            for arg in node.children[1:]:
                self._expr(arg, acc, write=False)
            return
        for child in node.children:
            self._expr(child, acc, write=False)

    def _lvalue(self, node: AstNode, acc: StmtAccess, also_read: bool) -> None:
        kind = node.kind
        if kind == "Identifier":
            sym = self.table.resolve(node)
            if sym is not None and sym.storage != "enum_const" \
                    and sym.type_shape != "function":
                acc.writes.add(Access(sym, WHOLE))
                if also_read:
                    acc.reads.add(Access(sym, WHOLE))
            return
        if kind == "ArraySubscript":
            self._subscript_access(node, acc, write=True, also_read=also_read)
            return
        if kind == "UnaryExpr" and node.op == "*":
            self._deref_access(node, acc, write=True, also_read=also_read)
            return
        if kind == "MemberExpr":
            self._member_access(node, acc, write=True, also_read=also_read)
            return
        if kind == "CastExpr":
            self._lvalue(node.children[0], acc, also_read)
            return
        # unusual lvalue: record reads conservatively
        self._expr(node, acc, write=False)

    def _subscript_access(self, node: AstNode, acc: StmtAccess, write: bool,
                          also_read: bool = False) -> None:
        base, dims = self._collapse_subscript(node)
        for dim in dims:
            self._expr(dim, acc, write=False)
        if base.kind != "Identifier":
            self._expr(base, acc, write=False)
            return
        sym = self.table.resolve(base)
        if sym is None:
            return
        form = self._subscript_form(dims)
        access = Access(sym, form)
        if write:
            acc.writes.add(access)
            if also_read:
                acc.reads.add(access)
        else:
            acc.reads.add(access)

    @staticmethod
    def _collapse_subscript(node: AstNode) -> tuple[AstNode, list[AstNode]]:
        dims: list[AstNode] = []
        cur = node
        while cur.kind == "ArraySubscript":
            dims.append(cur.children[1])
            cur = cur.children[0]
        dims.reverse()
        return cur, dims

    def _subscript_form(self, dims: list[AstNode]):
        lins: list[LinExpr] = []
        for dim in dims:
            lin = self.linearize(dim)
            if lin is None:
                if dim.kind == "ArraySubscript":
                    base, inner_dims = self._collapse_subscript(dim)
                    if base.kind == "Identifier":
                        sym = self.table.resolve(base)
                        if sym is not None and all(
                                self.linearize(d) is not None for d in inner_dims):
                            return Indirect(sym)
                return UNKNOWN
            lins.append(lin)
        return Affine(tuple(lins))

    def linearize(self, node: AstNode) -> LinExpr | None:
        return linearize(node, self.table)

    def _deref_access(self, node: AstNode, acc: StmtAccess, write: bool,
                      also_read: bool = False) -> None:
        inner = node.children[0]
        if inner.kind == "Identifier":
            sym = self.table.resolve(inner)
            if sym is not None:
                form = Affine((LinExpr.constant(0),))
                access = Access(sym, form)
                if write:
                    acc.writes.add(access)
                    if also_read:
                        acc.reads.add(access)
                else:
                    acc.reads.add(access)
            return
        # *(p + i) and friends: reads of the inner expression, unknown target
        self._expr(inner, acc, write=False)
        for n in inner.walk():
            if n.kind == "Identifier":
                sym = self.table.resolve(n)
                if sym is not None and sym.indexable:
                    access = Access(sym, UNKNOWN)
                    (acc.writes if write else acc.reads).add(access)

    def _member_access(self, node: AstNode, acc: StmtAccess, write: bool,
                       also_read: bool = False) -> None:
        base = node.children[0]
        while base.kind == "MemberExpr":
            base = base.children[0]
        if base.kind == "Identifier":
            sym = self.table.resolve(base)
            if sym is not None:
                form = WHOLE if node.op == "." else UNKNOWN
                access = Access(sym, form)
                if write:
                    acc.writes.add(access)
                    if also_read:
                        acc.reads.add(access)
                else:
                    acc.reads.add(access)
            return
        self._expr(base, acc, write=False)


def linearize(node: AstNode, table: ScopedSymbolTable) -> LinExpr | None:
    """Affine form of an index expression, or None when not affine."""
    kind = node.kind
    if kind == "Literal":
        try:
            return LinExpr.constant(int(node.value, 0))
        except ValueError:
            return None
    if kind == "Identifier":
        sym = table.resolve(node)
        if sym is None:
            return None
        return LinExpr.variable(sym)
    if kind == "CastExpr":
        return linearize(node.children[0], table)
    if kind == "UnaryExpr" and node.op in ("+", "-"):
        inner = linearize(node.children[0], table)
        if inner is None:
            return None
        return inner if node.op == "+" else inner.scaled(-1)
    if kind == "BinaryExpr" and node.op in ("+", "-"):
        a = linearize(node.children[0], table)
        b = linearize(node.children[1], table)
        if a is None or b is None:
            return None
        return a + b if node.op == "+" else a - b
    if kind == "BinaryExpr" and node.op == "*":
        a = linearize(node.children[0], table)
        b = linearize(node.children[1], table)
        if a is None or b is None:
            return None
        if not a.terms:
            return b.scaled(a.const)
        if not b.terms:
            return a.scaled(b.const)
        return None
    return None


def compute_def_use(fn: AstNode, table: ScopedSymbolTable) -> DefUseInfo:
    """Conservative per-statement read/write sets; `x op= e` reads and writes x."""
    return _DefUseBuilder(fn, table).build()


# -- purity -------------------------------------------------------------------

@dataclass(frozen=True)
class PurityClass:
    level: str  # pure | impure | unknown
    reasons: tuple[str, ...] = ()


_PURE, _UNKNOWN, _IMPURE = 0, 1, 2
_LEVEL_NAME = {_PURE: "pure", _UNKNOWN: "unknown", _IMPURE: "impure"}


def classify_purity(functions: dict[str, AstNode],
                    defuse: dict[str, DefUseInfo],
                    io_functions: frozenset[str] | set[str] = DEFAULT_IO_FUNCTIONS,
                    ) -> dict[str, PurityClass]:
    """Fixed point over the call graph; order of processing does not matter.

    Functions writing globals/statics or through pointer parameters, doing
    I/O, or (transitively) calling impure functions are impure. Unresolved
    external callees and opaque bodies give `unknown`, never a Pure issue.
    """
    level: dict[str, int] = {}
    reasons: dict[str, set[str]] = {}
    calls: dict[str, list[str]] = {}

    for name, fn in functions.items():
        lv, rs = _PURE, set()
        if fn.opaque:
            lv, rs = _UNKNOWN, {"opaque_body"}
        du = defuse.get(name)
        callee_names: list[str] = []
        if du is not None:
            for _, acc in du.stmts.items():
                callee_names.extend(acc.calls)
                for access in acc.writes:
                    sym = access.symbol
                    if sym.storage in ("global", "static_file", "static_local"):
                        lv, rs = _IMPURE, rs | {"writes_global"}
                    elif sym.storage == "parameter" and not isinstance(access.form, Whole):
                        lv, rs = _IMPURE, rs | {"writes_through_pointer_param"}
                    elif sym.type_shape == "pointer" and not isinstance(access.form, Whole):
                        if lv < _UNKNOWN:
                            lv = _UNKNOWN
                        rs = rs | {"writes_through_pointer_param"}
        for callee in callee_names:
            if callee in io_functions:
                lv, rs = _IMPURE, rs | {"performs_io"}
        level[name] = lv
        reasons[name] = rs
        calls[name] = callee_names

    changed = True
    while changed:
        changed = False
        for name in functions:
            lv = level[name]
            rs = reasons[name]
            for callee in calls[name]:
                if callee in io_functions:
                    continue
                if callee not in functions:
                    if lv < _UNKNOWN:
                        lv = _UNKNOWN
                        rs = rs | {"recursive_unresolved"}
                    continue
                clv = level[callee]
                if clv == _IMPURE and lv < _IMPURE:
                    lv = _IMPURE
                    rs = rs | {"calls_impure"}
                elif clv == _UNKNOWN and lv < _UNKNOWN:
                    lv = _UNKNOWN
                    rs = rs | {"recursive_unresolved"}
            if lv != level[name] or rs != reasons[name]:
                level[name] = lv
                reasons[name] = rs
                changed = True

    out: dict[str, PurityClass] = {}
    for name in functions:
        lv = level[name]
        rs = tuple(sorted(reasons[name])) if lv != _PURE else ()
        out[name] = PurityClass(_LEVEL_NAME[lv], rs)
    return out
