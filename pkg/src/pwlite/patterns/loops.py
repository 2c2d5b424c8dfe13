"""Loop-nest enumeration and canonical-form analysis."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..cfront.astnodes import AstNode, OmpDirective
from ..semantics import (DefUseInfo, LinExpr, ScopedSymbolTable, Symbol,
                         linearize)

_LOOPY = ("ForStmt", "WhileStmt", "DoWhileStmt")


@dataclass(eq=False)
class LoopNest:
    loop: AstNode  # the ForStmt
    index_var: Symbol | None
    lower: LinExpr | None
    upper: LinExpr | None
    cond_op: str | None  # < <= > >=
    step: int | None
    body: AstNode
    depth: int
    children: list["LoopNest"] = field(default_factory=list)
    contains_while: bool = False
    contains_call: list[str] = field(default_factory=list)
    canonical: bool = False
    enclosing_omp: list[OmpDirective] = field(default_factory=list)
    attached_omp: OmpDirective | None = None

    @property
    def innermost(self) -> bool:
        return not self.children

    def self_and_descendants(self):
        yield self
        for child in self.children:
            yield from child.self_and_descendants()

    def trip_count(self) -> int | None:
        """Iteration count when bounds and step are compile-time constants."""
        if not self.canonical or self.lower is None or self.upper is None:
            return None
        if self.lower.terms or self.upper.terms or not self.step:
            return None
        lo, hi, step = self.lower.const, self.upper.const, self.step
        if self.cond_op == "<":
            span = hi - lo
        elif self.cond_op == "<=":
            span = hi - lo + 1
        elif self.cond_op == ">":
            span = lo - hi
        elif self.cond_op == ">=":
            span = lo - hi + 1
        else:
            return None
        if span <= 0:
            return 0
        return (span + abs(step) - 1) // abs(step)

    def declared_inside(self, sym: Symbol) -> bool:
        scope = sym.declared_scope
        span = scope.span if scope is not None else None
        return (span is not None and span.start >= self.loop.span.start
                and span.end <= self.loop.span.end)

    def header_nodes(self) -> tuple[AstNode, AstNode, AstNode]:
        init, cond, incr, _ = self.loop.children
        return init, cond, incr

    def __repr__(self) -> str:
        index = self.index_var.name if self.index_var else "?"
        return f"<LoopNest {index} depth={self.depth} canonical={self.canonical}>"


def _canonical_parts(loop: AstNode, table: ScopedSymbolTable, du: DefUseInfo):
    """Extract (index, lower, cond_op, upper, step) or mark non-canonical."""
    init, cond, incr, _ = loop.children

    index: Symbol | None = None
    lower: LinExpr | None = None
    if init.kind == "Declaration" and init.declarators and len(init.declarators) == 1:
        decl = init.declarators[0]
        index = table.decl_symbols.get(id(decl))
        lower = linearize(init.children[0], table) if init.children else None
    elif init.kind == "ExprStmt" and init.children \
            and init.children[0].kind == "AssignExpr" and init.children[0].op == "=":
        lhs, rhs = init.children[0].children
        if lhs.kind == "Identifier":
            index = table.resolve(lhs)
            lower = linearize(rhs, table)
    if index is None:
        return None, None, None, None, None

    cond_op = None
    upper = None
    if cond.kind == "BinaryExpr" and cond.op in ("<", "<=", ">", ">="):
        a, b = cond.children
        if a.kind == "Identifier" and table.resolve(a) is index:
            cond_op = cond.op
            upper = linearize(b, table)
        elif b.kind == "Identifier" and table.resolve(b) is index:
            cond_op = {"<": ">", "<=": ">=", ">": "<", ">=": "<="}[cond.op]
            upper = linearize(a, table)
    if cond_op is None:
        return index, lower, None, None, None

    step = None
    if incr.kind in ("UnaryExpr", "PostfixExpr") and incr.op in ("++", "--"):
        target = incr.children[0]
        if target.kind == "Identifier" and table.resolve(target) is index:
            step = 1 if incr.op == "++" else -1
    elif incr.kind == "AssignExpr" and incr.op in ("+=", "-=", "="):
        lhs, rhs = incr.children
        if lhs.kind == "Identifier" and table.resolve(lhs) is index:
            lv = linearize(rhs, table)
            if incr.op in ("+=", "-="):
                if lv is not None and not lv.terms:
                    step = lv.const if incr.op == "+=" else -lv.const
            else:  # i = i + c / i = i - c
                if lv is not None and lv.coeff(index) == 1 and not lv.drop(index).terms:
                    step = lv.drop(index).const
    return index, lower, cond_op, upper, step


def _index_written_in_body(index: Symbol, body: AstNode, du: DefUseInfo) -> bool:
    for _, acc in du.statements_under(body):
        for access in acc.writes:
            if access.symbol is index:
                return True
    return False


def enumerate_loops(fn: AstNode, table: ScopedSymbolTable,
                    du: DefUseInfo) -> list[LoopNest]:
    """All for-loop nests of a function, outermost first; while-loops never
    root a nest but set contains_while on the enclosing one."""
    roots: list[LoopNest] = []

    def walk(node: AstNode, parent: LoopNest | None, depth: int,
             omp_stack: list[OmpDirective], attached: OmpDirective | None) -> None:
        if node.kind == "ForStmt":
            index, lower, cond_op, upper, step = _canonical_parts(node, table, du)
            nest = LoopNest(loop=node, index_var=index, lower=lower, upper=upper,
                            cond_op=cond_op, step=step, body=node.children[3],
                            depth=depth, enclosing_omp=list(omp_stack),
                            attached_omp=attached)
            nest.canonical = (index is not None and cond_op is not None
                              and step is not None and step != 0
                              and not _index_written_in_body(index, node.children[3], du))
            if parent is None:
                roots.append(nest)
            else:
                parent.children.append(nest)
            for child in node.children:
                walk(child, nest, depth + 1, omp_stack, None)
            return
        if node.kind in ("WhileStmt", "DoWhileStmt") and parent is not None:
            parent.contains_while = True
        if node.kind == "OmpPragma" and node.directive is not None:
            inner_attached = node.directive if node.children else None
            omp_stack.append(node.directive)
            for child in node.children:
                walk(child, parent, depth, omp_stack, inner_attached)
            omp_stack.pop()
            return
        for child in node.children:
            walk(child, parent, depth, omp_stack, None)

    body = fn.children[0] if fn.children else None
    if body is not None:
        walk(body, None, 0, [], None)

    def fix_depth(nest: LoopNest, depth: int) -> None:
        nest.depth = depth
        for child in nest.children:
            fix_depth(child, depth + 1)

    def collect_calls(nest: LoopNest) -> None:
        total = du.subtree(nest.loop)
        nest.contains_call = list(dict.fromkeys(total.calls))
        for child in nest.children:
            collect_calls(child)

    for root in roots:
        fix_depth(root, 0)
        collect_calls(root)
    return roots
