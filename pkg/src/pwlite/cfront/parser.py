"""Recursive-descent parser for the supported C99 subset.

Unsupported constructs inside a function body (goto, K&R definitions,
variadic definitions, calls through function-pointer variables) mark the
enclosing function opaque instead of aborting the file. An unrecoverable
top-level error skips to the next top-level declaration.
"""

from __future__ import annotations

from ..errors import Diagnostic, ParseError
from .astnodes import (ATTACHING_DIRECTIVES, AstNode, Declarator,
                       parse_omp_directive)
from .lexer import Token, tokenize
from .source import SourceFile, Span

TYPE_KEYWORDS = frozenset(
    "void char short int long float double signed unsigned _Bool".split())
QUALIFIERS = frozenset(
    "const volatile restrict inline register auto".split())
STORAGE_KEYWORDS = frozenset("static extern typedef".split())

ASSIGN_OPS = frozenset(
    "= += -= *= /= %= &= |= ^= <<= >>=".split())

_BINARY_LEVELS = (
    ("||",), ("&&",), ("|",), ("^",), ("&",), ("==", "!="),
    ("<", "<=", ">", ">="), ("<<", ">>"), ("+", "-"), ("*", "/", "%"),
)


class Parser:
    def __init__(self, pp: SourceFile, diagnostics: list[Diagnostic] | None = None):
        self.pp = pp
        self.toks = tokenize(pp)
        self.i = 0
        self.typedefs: set[str] = set()
        self.enum_constants: set[str] = set()
        self.diagnostics = diagnostics if diagnostics is not None else []
        self.fn_opaque = False

    # -- token helpers ------------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        j = min(self.i + ahead, len(self.toks) - 1)
        return self.toks[j]

    def advance(self) -> Token:
        tok = self.toks[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind in ("punct", "kw")

    def accept(self, text: str) -> Token | None:
        if self.at(text):
            return self.advance()
        return None

    def expect(self, text: str) -> Token:
        if self.at(text):
            return self.advance()
        tok = self.peek()
        line, col = self.pp.line_col(tok.start)
        raise ParseError(self.pp.path, line, col,
                         f"unexpected {tok.text!r}", expected=(text,))

    def error(self, message: str, expected=()) -> ParseError:
        tok = self.peek()
        line, col = self.pp.line_col(tok.start)
        return ParseError(self.pp.path, line, col, message, expected=tuple(expected))

    def span(self, start: int, end_tok: Token | None = None) -> Span:
        end = (end_tok or self.toks[max(self.i - 1, 0)]).end
        return Span(self.pp, start, end)

    # -- entry point ---------------------------------------------------------

    def parse_translation_unit(self) -> AstNode:
        children: list[AstNode] = []
        while self.peek().kind != "eof":
            if self.peek().kind == "pragma":
                node = self._pragma_statement(top_level=True)
                if node is not None:
                    children.append(node)
                continue
            if self.accept(";"):
                continue
            try:
                children.append(self._external_declaration())
            except ParseError as err:
                self.diagnostics.append(Diagnostic(
                    self.pp.path, err.line, err.col, err.msg, "error"))
                self._skip_to_top_level()
        span = Span(self.pp, 0, len(self.pp.text))
        return AstNode("TranslationUnit", span, children)

    def _skip_to_top_level(self) -> None:
        depth = 0
        while self.peek().kind != "eof":
            tok = self.advance()
            if tok.text == "{":
                depth += 1
            elif tok.text == "}":
                depth -= 1
                if depth <= 0:
                    return
            elif tok.text == ";" and depth == 0:
                return

    # -- declarations ---------------------------------------------------------

    def _is_decl_start(self, ahead: int = 0) -> bool:
        tok = self.peek(ahead)
        if tok.kind == "kw":
            return (tok.text in TYPE_KEYWORDS or tok.text in QUALIFIERS
                    or tok.text in STORAGE_KEYWORDS
                    or tok.text in ("struct", "union", "enum"))
        return tok.kind == "id" and (tok.text in self.typedefs
                                     or tok.text == "__attribute__")

    def _parse_attribute(self) -> bool:
        """Consume __attribute__((...)); True when it marks purity."""
        self.advance()  # __attribute__
        self.expect("(")
        depth = 1
        pure = False
        while depth and self.peek().kind != "eof":
            tok = self.advance()
            if tok.text == "(":
                depth += 1
            elif tok.text == ")":
                depth -= 1
            elif tok.kind == "id" and tok.text in ("pure", "const"):
                pure = True
            elif tok.kind == "kw" and tok.text == "const":
                pure = True
        return pure

    def _parse_specifiers(self):
        """Returns (base_type, storage, is_typedef, pure_attr, saw_any)."""
        words: list[str] = []
        storage = None
        is_typedef = False
        pure_attr = False
        saw = False
        while True:
            tok = self.peek()
            if tok.kind == "id" and tok.text == "__attribute__":
                pure_attr |= self._parse_attribute()
                saw = True
                continue
            if tok.kind == "kw":
                if tok.text in QUALIFIERS:
                    self.advance()
                    saw = True
                    continue
                if tok.text in ("static", "extern"):
                    storage = tok.text
                    self.advance()
                    saw = True
                    continue
                if tok.text == "typedef":
                    is_typedef = True
                    self.advance()
                    saw = True
                    continue
                if tok.text in TYPE_KEYWORDS:
                    words.append(self.advance().text)
                    saw = True
                    continue
                if tok.text in ("struct", "union"):
                    words.append(self._parse_struct_spec())
                    saw = True
                    continue
                if tok.text == "enum":
                    words.append(self._parse_enum_spec())
                    saw = True
                    continue
            if (tok.kind == "id" and tok.text in self.typedefs and not words):
                words.append(self.advance().text)
                saw = True
                continue
            break
        base = " ".join(words) if words else "int"
        return base, storage, is_typedef, pure_attr, saw

    def _parse_struct_spec(self) -> str:
        kw = self.advance().text  # struct | union
        name = ""
        if self.peek().kind == "id":
            name = self.advance().text
        if self.at("{"):
            self.advance()
            depth = 1
            while depth and self.peek().kind != "eof":
                tok = self.advance()
                if tok.text == "{":
                    depth += 1
                elif tok.text == "}":
                    depth -= 1
        return f"{kw} {name}".strip()

    def _parse_enum_spec(self) -> str:
        self.advance()  # enum
        name = ""
        if self.peek().kind == "id":
            name = self.advance().text
        if self.at("{"):
            self.advance()
            while not self.at("}") and self.peek().kind != "eof":
                if self.peek().kind == "id":
                    self.enum_constants.add(self.peek().text)
                    self.advance()
                    if self.accept("="):
                        self._parse_assign()
                    self.accept(",")
                else:
                    self.advance()
            self.expect("}")
        return f"enum {name}".strip()

    def _parse_declarator(self, base: str) -> Declarator:
        stars = 0
        while True:
            if self.accept("*"):
                stars += 1
                while self.peek().kind == "kw" and self.peek().text in QUALIFIERS:
                    self.advance()
                continue
            if self.peek().kind == "id" and self.peek().text == "__attribute__":
                self._parse_attribute()
                continue
            break
        name = None
        start_tok = self.peek()
        fnptr = False
        if self.at("(") and self.peek(1).text == "*":
            # function-pointer declarator: (*name)(...)
            self.advance()
            self.advance()
            if self.peek().kind == "id":
                name = self.advance().text
            self.expect(")")
            fnptr = True
            stars += 1
        elif self.peek().kind == "id":
            name = self.advance().text
        rank = 0
        params: list[Declarator] | None = None
        variadic = False
        while True:
            if self.at("["):
                self.advance()
                if not self.at("]"):
                    self._parse_assign()
                self.expect("]")
                rank += 1
                continue
            if self.at("(") and not fnptr and params is None:
                params, variadic = self._parse_params()
                continue
            if self.peek().kind == "id" and self.peek().text == "__attribute__":
                self._parse_attribute()
                continue
            break
        if params is not None:
            shape = "function"
        elif rank:
            shape = "array"
        elif stars:
            shape = "pointer"
        elif base.startswith(("struct", "union")):
            shape = "struct"
        else:
            shape = "scalar"
        decl = Declarator(name=name, type_shape=shape, rank=rank, base_type=base,
                          span=Span(self.pp, start_tok.start, self.toks[self.i - 1].end),
                          variadic=variadic)
        decl.params = params  # type: ignore[attr-defined]
        return decl

    def _parse_params(self):
        self.expect("(")
        params: list[Declarator] = []
        variadic = False
        if self.accept(")"):
            return params, variadic
        if self.peek().text == "void" and self.peek(1).text == ")":
            self.advance()
            self.advance()
            return params, variadic
        while True:
            if self.at("..."):
                self.advance()
                variadic = True
            elif self._is_decl_start():
                base, _, _, _, _ = self._parse_specifiers()
                params.append(self._parse_declarator(base))
            elif self.peek().kind == "id":
                # K&R identifier list
                params.append(Declarator(name=self.advance().text,
                                         type_shape="unknown"))
            else:
                raise self.error("expected parameter declaration")
            if not self.accept(","):
                break
        self.expect(")")
        return params, variadic

    def _parse_initializer(self) -> AstNode:
        if self.at("{"):
            start = self.advance().start
            items: list[AstNode] = []
            while not self.at("}") and self.peek().kind != "eof":
                items.append(self._parse_initializer())
                if not self.accept(","):
                    break
            self.expect("}")
            return AstNode("InitList", self.span(start), items)
        return self._parse_assign()

    def _external_declaration(self) -> AstNode:
        start = self.peek().start
        base, storage, is_typedef, pure_attr, saw = self._parse_specifiers()
        if not saw:
            raise self.error(f"expected declaration, found {self.peek().text!r}")
        if is_typedef:
            decls = [self._parse_declarator(base)]
            while self.accept(","):
                decls.append(self._parse_declarator(base))
            self.expect(";")
            for d in decls:
                if d.name:
                    self.typedefs.add(d.name)
            return AstNode("Typedef", self.span(start), declarators=decls,
                           storage="typedef")
        if self.at(";"):
            # bare struct/union/enum definition
            self.advance()
            return AstNode("Declaration", self.span(start), declarators=[],
                           storage=storage)
        decl = self._parse_declarator(base)
        params = getattr(decl, "params", None)
        if params is not None and (self.at("{") or self._is_decl_start()):
            return self._function_definition(start, decl, storage, pure_attr)
        # plain declaration (possibly a prototype)
        declarators = [decl]
        inits: list[AstNode] = []
        inits.append(self._parse_init_opt())
        while self.accept(","):
            declarators.append(self._parse_declarator(base))
            inits.append(self._parse_init_opt())
        self.expect(";")
        node = AstNode("Declaration", self.span(start), inits,
                       declarators=declarators, storage=storage)
        return node

    def _parse_init_opt(self) -> AstNode:
        if self.accept("="):
            return self._parse_initializer()
        return AstNode("Empty", Span(self.pp, self.peek().start, self.peek().start))

    def _function_definition(self, start, decl, storage, pure_attr) -> AstNode:
        self.fn_opaque = False
        opaque = False
        if self._is_decl_start():
            # K&R parameter declarations before the body
            opaque = True
            while not self.at("{") and self.peek().kind != "eof":
                self.advance()
        if decl.variadic:
            opaque = True
        while self.peek().kind == "id" and self.peek().text == "__attribute__":
            pure_attr |= self._parse_attribute()
        body = self._parse_compound()
        node = AstNode("FunctionDef", self.span(start), [body], name=decl.name,
                       declarators=[decl], params=getattr(decl, "params", None) or [],
                       storage=storage, pure_attr=pure_attr)
        node.opaque = opaque or self.fn_opaque
        return node

    # -- statements --------------------------------------------------------

    def _parse_compound(self) -> AstNode:
        start = self.expect("{").start
        stmts: list[AstNode] = []
        while not self.at("}") and self.peek().kind != "eof":
            stmt = self._statement_with_recovery()
            if stmt is not None:
                stmts.append(stmt)
        self.expect("}")
        return AstNode("CompoundStmt", self.span(start), stmts)

    def _statement_with_recovery(self) -> AstNode | None:
        start = self.peek().start
        try:
            return self._parse_statement()
        except ParseError as err:
            self.diagnostics.append(Diagnostic(
                self.pp.path, err.line, err.col, err.msg, "error"))
            self.fn_opaque = True
            depth = 0
            while self.peek().kind != "eof":
                tok = self.peek()
                if tok.text == ";" and depth == 0:
                    self.advance()
                    break
                if tok.text == "{":
                    depth += 1
                elif tok.text == "}":
                    if depth == 0:
                        break
                    depth -= 1
                self.advance()
            return AstNode("OpaqueStmt", self.span(start))

    def _parse_statement(self) -> AstNode | None:
        tok = self.peek()
        if tok.kind == "pragma":
            return self._pragma_statement(top_level=False)
        if tok.text == "{":
            return self._parse_compound()
        if tok.text == ";":
            start = self.advance().start
            return AstNode("EmptyStmt", self.span(start))
        if tok.kind == "kw":
            handler = {
                "if": self._parse_if, "while": self._parse_while,
                "do": self._parse_do, "for": self._parse_for,
                "switch": self._parse_switch, "return": self._parse_return,
                "break": self._simple_stmt, "continue": self._simple_stmt,
                "case": self._parse_case, "default": self._parse_case,
                "goto": self._parse_goto,
            }.get(tok.text)
            if handler is not None:
                return handler()
        if self._is_decl_start():
            return self._local_declaration()
        if tok.kind == "id" and self.peek(1).text == ":":
            start = self.advance().start
            self.advance()
            inner = self._parse_statement()
            children = [inner] if inner else []
            return AstNode("LabelStmt", self.span(start), children, name=tok.text)
        # expression statement
        start = tok.start
        expr = self._parse_expr()
        self.expect(";")
        return AstNode("ExprStmt", self.span(start), [expr])

    def _pragma_statement(self, top_level: bool) -> AstNode | None:
        tok = self.advance()
        d = parse_omp_directive(tok.text)
        if d is None:
            return None  # non-omp pragma: ignored
        node = AstNode("OmpPragma", Span(self.pp, tok.start, tok.end), directive=d)
        if d.directive in ATTACHING_DIRECTIVES and not top_level:
            stmt = self._parse_statement()
            if stmt is not None:
                d.attached_stmt = stmt
                node.children = [stmt]
                node.span = Span(self.pp, tok.start, stmt.span.end)
        return node

    def _local_declaration(self) -> AstNode:
        start = self.peek().start
        base, storage, is_typedef, _, saw = self._parse_specifiers()
        if not saw:
            raise self.error("expected declaration")
        if is_typedef:
            decls = [self._parse_declarator(base)]
            self.expect(";")
            for d in decls:
                if d.name:
                    self.typedefs.add(d.name)
            return AstNode("Typedef", self.span(start), declarators=decls,
                           storage="typedef")
        if self.at(";"):
            self.advance()
            return AstNode("Declaration", self.span(start), declarators=[],
                           storage=storage)
        declarators = [self._parse_declarator(base)]
        inits = [self._parse_init_opt()]
        while self.accept(","):
            declarators.append(self._parse_declarator(base))
            inits.append(self._parse_init_opt())
        self.expect(";")
        return AstNode("Declaration", self.span(start), inits,
                       declarators=declarators, storage=storage)

    def _parse_if(self) -> AstNode:
        start = self.advance().start
        self.expect("(")
        cond = self._parse_expr()
        self.expect(")")
        then = self._parse_statement() or AstNode("EmptyStmt", self.span(start))
        children = [cond, then]
        if self.peek().kind == "kw" and self.peek().text == "else":
            self.advance()
            other = self._parse_statement()
            if other is not None:
                children.append(other)
        return AstNode("IfStmt", self.span(start), children)

    def _parse_while(self) -> AstNode:
        start = self.advance().start
        self.expect("(")
        cond = self._parse_expr()
        self.expect(")")
        body = self._parse_statement() or AstNode("EmptyStmt", self.span(start))
        return AstNode("WhileStmt", self.span(start), [cond, body])

    def _parse_do(self) -> AstNode:
        start = self.advance().start
        body = self._parse_statement() or AstNode("EmptyStmt", self.span(start))
        if not (self.peek().kind == "kw" and self.peek().text == "while"):
            raise self.error("expected 'while' after do-body", expected=("while",))
        self.advance()
        self.expect("(")
        cond = self._parse_expr()
        self.expect(")")
        self.expect(";")
        return AstNode("DoWhileStmt", self.span(start), [body, cond])

    def _parse_for(self) -> AstNode:
        start = self.advance().start
        self.expect("(")
        if self.at(";"):
            init = AstNode("Empty", self.span(self.advance().start))
        elif self._is_decl_start():
            init = self._local_declaration()  # consumes ';'
        else:
            e = self._parse_expr()
            self.expect(";")
            init = AstNode("ExprStmt", Span(self.pp, e.span.start, e.span.end), [e])
        if self.at(";"):
            cond = AstNode("Empty", self.span(self.advance().start))
        else:
            cond = self._parse_expr()
            self.expect(";")
        if self.at(")"):
            incr = AstNode("Empty", self.span(self.peek().start))
        else:
            incr = self._parse_expr()
        self.expect(")")
        body = self._parse_statement() or AstNode("EmptyStmt", self.span(start))
        return AstNode("ForStmt", self.span(start), [init, cond, incr, body])

    def _parse_switch(self) -> AstNode:
        start = self.advance().start
        self.expect("(")
        cond = self._parse_expr()
        self.expect(")")
        body = self._parse_statement() or AstNode("EmptyStmt", self.span(start))
        return AstNode("SwitchStmt", self.span(start), [cond, body])

    def _parse_return(self) -> AstNode:
        start = self.advance().start
        children = []
        if not self.at(";"):
            children.append(self._parse_expr())
        self.expect(";")
        return AstNode("ReturnStmt", self.span(start), children)

    def _simple_stmt(self) -> AstNode:
        tok = self.advance()
        self.expect(";")
        kind = "BreakStmt" if tok.text == "break" else "ContinueStmt"
        return AstNode(kind, self.span(tok.start))

    def _parse_case(self) -> AstNode:
        tok = self.advance()
        children = []
        if tok.text == "case":
            children.append(self._parse_ternary())
        self.expect(":")
        return AstNode("CaseLabel", self.span(tok.start), children)

    def _parse_goto(self) -> AstNode:
        start = self.advance().start
        if self.peek().kind == "id":
            self.advance()
        self.expect(";")
        self.fn_opaque = True
        return AstNode("OpaqueStmt", self.span(start))

    # -- expressions --------------------------------------------------------

    def _parse_expr(self) -> AstNode:
        first = self._parse_assign()
        if not self.at(","):
            return first
        items = [first]
        while self.accept(","):
            items.append(self._parse_assign())
        return AstNode("CommaExpr", Span(self.pp, first.span.start,
                                         items[-1].span.end), items)

    def _parse_assign(self) -> AstNode:
        lhs = self._parse_ternary()
        tok = self.peek()
        if tok.kind == "punct" and tok.text in ASSIGN_OPS:
            self.advance()
            rhs = self._parse_assign()
            return AstNode("AssignExpr", Span(self.pp, lhs.span.start, rhs.span.end),
                           [lhs, rhs], op=tok.text)
        return lhs

    def _parse_ternary(self) -> AstNode:
        cond = self._parse_binary(0)
        if self.at("?"):
            self.advance()
            a = self._parse_expr()
            self.expect(":")
            b = self._parse_ternary()
            return AstNode("TernaryExpr", Span(self.pp, cond.span.start, b.span.end),
                           [cond, a, b])
        return cond

    def _parse_binary(self, level: int) -> AstNode:
        if level == len(_BINARY_LEVELS):
            return self._parse_cast()
        lhs = self._parse_binary(level + 1)
        while True:
            tok = self.peek()
            if tok.kind != "punct" or tok.text not in _BINARY_LEVELS[level]:
                return lhs
            self.advance()
            rhs = self._parse_binary(level + 1)
            lhs = AstNode("BinaryExpr", Span(self.pp, lhs.span.start, rhs.span.end),
                          [lhs, rhs], op=tok.text)

    def _at_typename(self) -> bool:
        tok = self.peek()
        if tok.kind == "kw":
            return tok.text in TYPE_KEYWORDS or tok.text in ("struct", "union", "enum") \
                or tok.text in ("const", "volatile")
        return tok.kind == "id" and tok.text in self.typedefs

    def _parse_typename(self) -> str:
        base, _, _, _, _ = self._parse_specifiers()
        stars = 0
        while self.accept("*"):
            stars += 1
        while self.at("["):
            self.advance()
            if not self.at("]"):
                self._parse_ternary()
            self.expect("]")
        return base + "*" * stars

    def _parse_cast(self) -> AstNode:
        if self.at("(") and self.i + 1 < len(self.toks):
            save = self.i
            self.advance()
            if self._at_typename():
                typename = self._parse_typename()
                if self.at(")"):
                    self.advance()
                    inner = self._parse_cast()
                    return AstNode("CastExpr",
                                   Span(self.pp, self.toks[save].start, inner.span.end),
                                   [inner], value=typename)
            self.i = save
        return self._parse_unary()

    def _parse_unary(self) -> AstNode:
        tok = self.peek()
        if tok.kind == "punct" and tok.text in ("!", "~", "+", "-", "*", "&", "++", "--"):
            self.advance()
            inner = self._parse_cast()
            return AstNode("UnaryExpr", Span(self.pp, tok.start, inner.span.end),
                           [inner], op=tok.text)
        if tok.kind == "kw" and tok.text == "sizeof":
            self.advance()
            if self.at("("):
                save = self.i
                self.advance()
                if self._at_typename():
                    typename = self._parse_typename()
                    self.expect(")")
                    return AstNode("SizeofExpr", self.span(tok.start), value=typename)
                self.i = save
            inner = self._parse_unary()
            return AstNode("SizeofExpr", Span(self.pp, tok.start, inner.span.end),
                           [inner])
        return self._parse_postfix()

    def _parse_postfix(self) -> AstNode:
        node = self._parse_primary()
        while True:
            tok = self.peek()
            if tok.text == "(" and tok.kind == "punct":
                self.advance()
                args: list[AstNode] = []
                while not self.at(")") and self.peek().kind != "eof":
                    args.append(self._parse_assign())
                    if not self.accept(","):
                        break
                end = self.expect(")")
                if node.kind != "Identifier":
                    self.fn_opaque = True  # call through expression
                node = AstNode("CallExpr", Span(self.pp, node.span.start, end.end),
                               [node] + args)
                continue
            if tok.text == "[":
                self.advance()
                index = self._parse_expr()
                end = self.expect("]")
                node = AstNode("ArraySubscript",
                               Span(self.pp, node.span.start, end.end), [node, index])
                continue
            if tok.text in (".", "->"):
                self.advance()
                field_tok = self.advance()
                if field_tok.kind not in ("id", "kw"):
                    raise self.error("expected member name")
                node = AstNode("MemberExpr",
                               Span(self.pp, node.span.start, field_tok.end),
                               [node], op=tok.text, name=field_tok.text)
                continue
            if tok.text in ("++", "--"):
                self.advance()
                node = AstNode("PostfixExpr", Span(self.pp, node.span.start, tok.end),
                               [node], op=tok.text)
                continue
            return node

    def _parse_primary(self) -> AstNode:
        tok = self.peek()
        if tok.kind == "id":
            self.advance()
            return AstNode("Identifier", Span(self.pp, tok.start, tok.end),
                           name=tok.text)
        if tok.kind == "num":
            self.advance()
            return AstNode("Literal", Span(self.pp, tok.start, tok.end),
                           value=tok.text)
        if tok.kind == "char":
            self.advance()
            return AstNode("Literal", Span(self.pp, tok.start, tok.end),
                           value=tok.text)
        if tok.kind == "str":
            start = tok.start
            parts = []
            while self.peek().kind == "str":
                parts.append(self.advance().text)
            return AstNode("StringLiteral",
                           Span(self.pp, start, self.toks[self.i - 1].end),
                           value=" ".join(parts))
        if self.at("("):
            self.advance()
            inner = self._parse_expr()
            self.expect(")")
            return inner
        raise self.error(f"unexpected token {tok.text!r} in expression")


def parse_translation_unit(pp: SourceFile,
                           diagnostics: list[Diagnostic] | None = None) -> AstNode:
    parser = Parser(pp, diagnostics)
    tu = parser.parse_translation_unit()
    # enum constants get recorded for the symbol builder
    tu.enum_constants = parser.enum_constants  # type: ignore[attr-defined]
    return tu
