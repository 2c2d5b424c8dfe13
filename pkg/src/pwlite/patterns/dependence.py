"""Loop-carried dependence testing (ZIV/SIV) and pattern classification.

The test is deliberately conservative: affine-vs-affine subscript pairs get
a ZIV/SIV decision, anything else (unknown subscripts, coupled coefficients,
symbolically different index terms) is assumed carried. Scalars follow the
privatizable / reduction rules; indirect subscripts produce dependences
tagged ``indirect`` so sparse patterns stay distinguishable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..cfront.astnodes import AstNode
from ..semantics import (Access, Affine, DefUseInfo, Indirect, LinExpr,
                         PurityClass, Symbol, Unknown, Whole)
from .loops import LoopNest

REDUCTION_OPS = frozenset({"+", "*", "min", "max", "&", "|", "^"})


@dataclass
class Dependence:
    kind: str  # flow | anti | output
    symbol: Symbol | None
    source_access: Access | None = None
    sink_access: Access | None = None
    carried: bool = True
    distance: int | None = None
    indirect: bool = False
    unknown: bool = False
    reduction_op: str | None = None
    privatizable: bool = False

    def describe(self) -> str:
        name = self.symbol.name if self.symbol else "<unknown>"
        where = f" (distance {self.distance})" if self.distance is not None else ""
        tag = " [indirect]" if self.indirect else ""
        tag += " [unknown]" if self.unknown else ""
        return f"carried {self.kind} dependence on '{name}'{where}{tag}" \
            if self.carried else f"loop-independent {self.kind} dependence on '{name}'"


@dataclass
class DependenceSet:
    entries: list[Dependence] = field(default_factory=list)

    def carried(self) -> list[Dependence]:
        return [d for d in self.entries if d.carried]

    def blocking(self) -> list[Dependence]:
        """Carried entries that rule out forall-style parallelization."""
        return [d for d in self.entries if d.carried and not d.privatizable]

    def has_unknown(self) -> bool:
        return any(d.unknown for d in self.entries)

    def covered_symbols(self) -> set[str]:
        """Symbol names the test knows something about (any tag counts)."""
        return {d.symbol.name for d in self.entries if d.symbol is not None}

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class PatternClass:
    kind: str  # forall | scalar_reduction | sparse_forall | sparse_reduction | sequential | unknown
    op: str | None = None
    variable: str | None = None

    def __str__(self) -> str:
        if self.kind in ("scalar_reduction", "sparse_reduction"):
            return f"{self.kind}({self.op}, {self.variable})"
        return self.kind

    @property
    def parallelizable(self) -> bool:
        return self.kind in ("forall", "scalar_reduction")


# -- reduction statement recognition -----------------------------------------


def _same_subscript(table, a: AstNode, b: AstNode) -> bool:
    """Structural equality of two lvalue expressions (token text based)."""
    return a.span.text().replace(" ", "") == b.span.text().replace(" ", "")


def reduction_statement(stmt: AstNode, table) -> tuple[Symbol, str, AstNode] | None:
    """Recognize ``x op= e``, ``x = x op e``, ``x++`` and the min/max
    if/ternary forms. Returns (symbol, operator, lvalue-expr) or None."""
    if stmt.kind == "ExprStmt" and stmt.children:
        return _reduction_expr(stmt.children[0], table)
    if stmt.kind == "IfStmt":
        return _minmax_if(stmt, table)
    return None


def _lvalue_symbol(expr: AstNode, table) -> Symbol | None:
    if expr.kind == "Identifier":
        return table.resolve(expr)
    if expr.kind == "ArraySubscript":
        base = expr
        while base.kind == "ArraySubscript":
            base = base.children[0]
        if base.kind == "Identifier":
            return table.resolve(base)
    return None


def _reads_symbol(expr: AstNode, table, sym: Symbol) -> bool:
    return any(n.kind == "Identifier" and table.resolve(n) is sym
               for n in expr.walk())


def _reduction_expr(expr: AstNode, table) -> tuple[Symbol, str, AstNode] | None:
    if expr.kind in ("UnaryExpr", "PostfixExpr") and expr.op == "++":
        sym = _lvalue_symbol(expr.children[0], table)
        if sym is not None:
            return sym, "+", expr.children[0]
        return None
    if expr.kind != "AssignExpr":
        return None
    lhs, rhs = expr.children
    sym = _lvalue_symbol(lhs, table)
    if sym is None:
        return None
    if expr.op in ("+=", "*=", "&=", "|=", "^="):
        if _reads_symbol(rhs, table, sym):
            return None
        return sym, expr.op[0], lhs
    if expr.op == "=":
        if rhs.kind == "BinaryExpr" and rhs.op in ("+", "*", "&", "|", "^"):
            a, b = rhs.children
            if _same_subscript(table, lhs, a) and not _reads_symbol(b, table, sym):
                return sym, rhs.op, lhs
            if rhs.op in ("+", "*", "&", "|", "^") \
                    and _same_subscript(table, lhs, b) \
                    and not _reads_symbol(a, table, sym):
                return sym, rhs.op, lhs
        if rhs.kind == "TernaryExpr":
            return _minmax_ternary(lhs, rhs, table, sym)
        if rhs.kind == "CallExpr" and rhs.children[0].kind == "Identifier" \
                and rhs.children[0].name in ("fmin", "fmax", "min", "max"):
            op = "min" if rhs.children[0].name.endswith("min") else "max"
            args = rhs.children[1:]
            if len(args) == 2 and any(_same_subscript(table, lhs, a) for a in args):
                other = args[1] if _same_subscript(table, lhs, args[0]) else args[0]
                if not _reads_symbol(other, table, sym):
                    return sym, op, lhs
    return None


def _cmp_direction(op: str) -> str:
    return "lt" if op in ("<", "<=") else "gt"


def _minmax_if(stmt: AstNode, table) -> tuple[Symbol, str, AstNode] | None:
    if len(stmt.children) != 2:  # no else branch allowed
        return None
    cond, then = stmt.children
    if cond.kind != "BinaryExpr" or cond.op not in ("<", "<=", ">", ">="):
        return None
    body = then
    if body.kind == "CompoundStmt":
        if len(body.children) != 1:
            return None
        body = body.children[0]
    if body.kind != "ExprStmt" or not body.children:
        return None
    assign = body.children[0]
    if assign.kind != "AssignExpr" or assign.op != "=":
        return None
    lhs, rhs = assign.children
    sym = _lvalue_symbol(lhs, table)
    if sym is None:
        return None
    a, b = cond.children
    # if (e < s) s = e  -> min;  if (e > s) s = e -> max (and mirrored)
    if _same_subscript(table, lhs, b) and _same_subscript(table, rhs, a):
        return sym, ("min" if _cmp_direction(cond.op) == "lt" else "max"), lhs
    if _same_subscript(table, lhs, a) and _same_subscript(table, rhs, b):
        return sym, ("max" if _cmp_direction(cond.op) == "lt" else "min"), lhs
    return None


def _minmax_ternary(lhs: AstNode, rhs: AstNode, table, sym: Symbol):
    cond, a, b = rhs.children
    if cond.kind != "BinaryExpr" or cond.op not in ("<", "<=", ">", ">="):
        return None
    ca, cb = cond.children
    # s = (e < s) ? e : s  and friends
    for picked, fallback in ((a, b), ):
        if not _same_subscript(table, lhs, fallback):
            continue
        if _same_subscript(table, picked, ca) and _same_subscript(table, lhs, cb):
            return sym, ("min" if _cmp_direction(cond.op) == "lt" else "max"), lhs
        if _same_subscript(table, picked, cb) and _same_subscript(table, lhs, ca):
            return sym, ("max" if _cmp_direction(cond.op) == "lt" else "min"), lhs
    if _same_subscript(table, lhs, a):
        if _same_subscript(table, b, ca) and _same_subscript(table, lhs, cb):
            return sym, ("max" if _cmp_direction(cond.op) == "lt" else "min"), lhs
        if _same_subscript(table, b, cb) and _same_subscript(table, lhs, ca):
            return sym, ("min" if _cmp_direction(cond.op) == "lt" else "max"), lhs
    return None


# -- the dependence test -------------------------------------------------------

_NEVER = "never"
_FREE = "free"
_UNKNOWN = "unknown"


def _dim_constraint(l1: LinExpr, l2: LinExpr, index: Symbol,
                    variant: set[Symbol], trip: int | None):
    """Constraint one subscript dimension places on the iteration distance."""
    a1, a2 = l1.coeff(index), l2.coeff(index)
    r1, r2 = l1.drop(index), l2.drop(index)
    same_vars = r1.terms == r2.terms
    invariant = all(s not in variant for s in r1.variables()) \
        and all(s not in variant for s in r2.variables())
    if a1 != a2 or not same_vars:
        return (_UNKNOWN, None)
    d = r2.const - r1.const
    if a1 == 0:
        if d == 0:
            return (_FREE, None)
        return (_NEVER, None) if invariant else (_FREE, None)
    if not invariant:
        return (_FREE, None) if d == 0 else (_UNKNOWN, None)
    if d % a1 != 0:
        return (_NEVER, None)
    delta = -d // a1  # iterations of the sink relative to the source
    if trip is not None and abs(delta) >= trip:
        return (_NEVER, None)
    return ("pin", delta)


def _pair_dependence(write: Access, other: Access, other_is_write: bool,
                     index: Symbol, variant: set[Symbol],
                     trip: int | None) -> Dependence | None:
    f1, f2 = write.form, other.form
    if isinstance(f1, Unknown) or isinstance(f2, Unknown):
        return Dependence("flow", write.symbol, write, other, carried=True,
                          unknown=True)
    if isinstance(f1, Indirect) or isinstance(f2, Indirect):
        kind = "output" if other_is_write else "flow"
        return Dependence(kind, write.symbol, write, other, carried=True,
                          indirect=isinstance(f1, Indirect))
    if isinstance(f1, Whole) or isinstance(f2, Whole):
        # whole-object access paired with element accesses: assume overlap
        kind = "output" if other_is_write else "flow"
        return Dependence(kind, write.symbol, write, other, carried=True,
                          unknown=True)
    assert isinstance(f1, Affine) and isinstance(f2, Affine)
    if len(f1.dims) != len(f2.dims):
        return Dependence("flow", write.symbol, write, other, carried=True,
                          unknown=True)
    pins: set[int] = set()
    saw_unknown = False
    for d1, d2 in zip(f1.dims, f2.dims):
        state, delta = _dim_constraint(d1, d2, index, variant, trip)
        if state == _NEVER:
            return None
        if state == _UNKNOWN:
            saw_unknown = True
        elif state == "pin":
            pins.add(delta)
    if len(pins) > 1:
        return None  # contradictory distances: dimensions cannot align
    if saw_unknown:
        kind = "output" if other_is_write else "flow"
        return Dependence(kind, write.symbol, write, other, carried=True,
                          unknown=True)
    if pins == {0}:
        kind = "output" if other_is_write else "flow"
        return Dependence(kind, write.symbol, write, other, carried=False,
                          distance=0)
    distance = pins.pop() if pins else None
    if other_is_write:
        kind = "output"
    elif distance is None:
        kind = "flow"
    else:
        kind = "flow" if distance > 0 else "anti"
    return Dependence(kind, write.symbol, write, other, carried=True,
                      distance=distance)


def _body_toplevel_statements(nest: LoopNest) -> list[AstNode]:
    body = nest.body
    if body.kind == "CompoundStmt":
        return list(body.children)
    return [body]


def _statements_touching(nest: LoopNest, du: DefUseInfo, sym: Symbol):
    for stmt, acc in du.statements_under(nest.loop):
        if any(a.symbol is sym for a in acc.reads | acc.writes):
            yield stmt, acc


def _write_before_read(nest: LoopNest, du: DefUseInfo, sym: Symbol, table) -> bool:
    """True when every iteration writes the scalar (whole, unconditionally,
    at the top level of the body) before any read."""
    for stmt in _body_toplevel_statements(nest):
        sub = du.subtree(stmt)
        reads = any(a.symbol is sym for a in sub.reads)
        writes = any(a.symbol is sym for a in sub.writes)
        if not reads and not writes:
            continue
        if stmt.kind == "ExprStmt" and stmt.children:
            expr = stmt.children[0]
            if expr.kind == "AssignExpr" and expr.op == "=" \
                    and expr.children[0].kind == "Identifier" \
                    and table.resolve(expr.children[0]) is sym \
                    and not _reads_symbol(expr.children[1], table, sym):
                return True
        if stmt.kind == "Declaration":
            continue
        return False
    return False


def test_dependences(nest: LoopNest, du: DefUseInfo, table) -> DependenceSet:
    """Loop-carried dependences of a canonical nest.

    Unknown subscripts are assumed carried; indirect subscripts yield
    ``indirect`` entries; privatizable and reduction scalars yield non-
    blocking entries so the oracle's findings stay covered.
    """
    deps = DependenceSet()
    if not nest.canonical:
        deps.entries.append(Dependence("flow", None, carried=True, unknown=True))
        return deps
    index = nest.index_var
    trip = nest.trip_count()

    header_stmts = set()
    init, _, _, _ = nest.loop.children
    header_stmts.add(nest.loop)  # cond/incr accesses live on the loop node
    if init is not None:
        header_stmts.add(init)

    # collect accesses per symbol, excluding this loop's own header and index
    per_symbol: dict[Symbol, list[tuple[Access, bool]]] = {}
    variant: set[Symbol] = {index}
    for stmt, acc in du.statements_under(nest.loop):
        if stmt in header_stmts:
            continue
        for a in acc.writes:
            variant.add(a.symbol)
        for a, w in [(a, False) for a in acc.reads] + [(a, True) for a in acc.writes]:
            sym = a.symbol
            if sym is index or sym.storage == "enum_const":
                continue
            if nest.declared_inside(sym):
                continue  # block-local: privatizable by construction
            per_symbol.setdefault(sym, []).append((a, w))

    # reduction statements in the nest (statement-level view)
    reduction_by_stmt: dict[AstNode, tuple[Symbol, str]] = {}
    for stmt, _ in du.statements_under(nest.loop):
        if stmt in header_stmts:
            continue
        red = reduction_statement(stmt, table)
        if red is not None:
            reduction_by_stmt[stmt] = (red[0], red[1])

    for sym, accesses in sorted(per_symbol.items(), key=lambda kv: kv[0].uid):
        writes = [a for a, w in accesses if w]
        if not writes:
            continue
        forms = {type(a.form).__name__ for a, _ in accesses}
        scalar_like = forms == {"Whole"}
        if scalar_like:
            deps.entries.extend(_scalar_dependences(
                nest, du, table, sym, reduction_by_stmt))
            continue
        indirect_writes = [a for a in writes if isinstance(a.form, Indirect)]
        if indirect_writes:
            deps.entries.extend(_indirect_dependences(
                nest, du, table, sym, reduction_by_stmt))
            continue
        deps.entries.extend(_affine_dependences(
            sym, accesses, index, variant, trip))
    return deps


def _scalar_dependences(nest, du, table, sym, reduction_by_stmt):
    touching = list(_statements_touching(nest, du, sym))
    ops = set()
    all_reduction = bool(touching)
    for stmt, _ in touching:
        red = reduction_by_stmt.get(stmt)
        if red is not None and red[0] is sym:
            ops.add(red[1])
        else:
            all_reduction = False
    if all_reduction and len(ops) == 1:
        op = ops.pop()
        if op in REDUCTION_OPS:
            return [Dependence("flow", sym, carried=True, reduction_op=op)]
    if _write_before_read(nest, du, table=table, sym=sym):
        return [Dependence("output", sym, carried=False, privatizable=True)]
    sub = du.subtree(nest.loop)
    has_read = any(a.symbol is sym for a in sub.reads)
    kind = "flow" if has_read else "output"
    return [Dependence(kind, sym, carried=True)]


def _indirect_dependences(nest, du, table, sym, reduction_by_stmt):
    touching = list(_statements_touching(nest, du, sym))
    ops = set()
    all_reduction = bool(touching)
    write_only = True
    for stmt, acc in touching:
        red = reduction_by_stmt.get(stmt)
        if any(a.symbol is sym for a in acc.reads):
            write_only = False
        if red is not None and red[0] is sym:
            ops.add(red[1])
        else:
            all_reduction = False
    if all_reduction and len(ops) == 1:
        op = ops.pop()
        if op in REDUCTION_OPS:
            return [Dependence("output", sym, carried=True, indirect=True,
                               reduction_op=op)]
    if write_only:
        # all writes indirect, never read: only write-write collisions possible
        return [Dependence("output", sym, carried=True, indirect=True)]
    return [Dependence("flow", sym, carried=True, indirect=True)]


def _affine_dependences(sym, accesses, index, variant, trip):
    entries = []
    seen = set()
    writes = [(a, w) for a, w in accesses if w]
    for wa, _ in writes:
        for other, other_is_write in accesses:
            if other_is_write and (id(other), id(wa)) in seen:
                continue
            seen.add((id(wa), id(other)))
            dep = _pair_dependence(wa, other, other_is_write, index, variant, trip)
            if dep is None:
                continue
            key = (dep.kind, dep.carried, dep.distance, dep.unknown)
            if any((e.kind, e.carried, e.distance, e.unknown) == key
                   for e in entries):
                continue
            entries.append(dep)
    return entries


# -- classification --------------------------------------------------------------


def classify_pattern(nest: LoopNest, deps: DependenceSet,
                     purity: dict[str, PurityClass] | None = None) -> PatternClass:
    """Map a loop's dependence set onto the pattern taxonomy."""
    if deps.has_unknown():
        return PatternClass("unknown")
    for callee in nest.contains_call:
        p = purity.get(callee) if purity else None
        if p is None or p.level != "pure":
            return PatternClass("unknown")
    carried = [d for d in deps.carried() if not d.privatizable]
    if not carried:
        return PatternClass("forall")
    indirect = [d for d in carried if d.indirect]
    scalar_red = [d for d in carried if d.reduction_op and not d.indirect]
    other = [d for d in carried if not d.indirect and not d.reduction_op]
    if other:
        return PatternClass("sequential")
    if scalar_red and not indirect:
        keys = {(d.symbol, d.reduction_op) for d in scalar_red}
        if len(keys) == 1:
            sym, op = keys.pop()
            return PatternClass("scalar_reduction", op, sym.name)
        return PatternClass("sequential")
    if indirect and not scalar_red:
        if any(d.kind != "output" and d.reduction_op is None for d in indirect):
            return PatternClass("sequential")
        tagged = [d for d in indirect if d.reduction_op]
        if tagged and len(tagged) == len(indirect):
            keys = {(d.symbol, d.reduction_op) for d in tagged}
            if len(keys) == 1:
                sym, op = keys.pop()
                return PatternClass("sparse_reduction", op, sym.name)
        if tagged:
            return PatternClass("sparse_forall")
        return PatternClass("sparse_forall")
    return PatternClass("sequential")
