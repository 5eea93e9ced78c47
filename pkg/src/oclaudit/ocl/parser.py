"""Recursive-descent parser for the constraint language.

Precedence, lowest binding first: implies, xor, or, and, relational,
additive, multiplicative, unary, postfix. Relational operators do not
associate, so `a < b < c` is a syntax error.
"""
from __future__ import annotations

from .ast import (
    AtPre,
    Binary,
    BinOp,
    BoolLit,
    Call,
    Clause,
    ClauseKind,
    CollOp,
    CollectionOp,
    ConstraintFile,
    ContextDecl,
    Expr,
    FieldAccess,
    Ident,
    IntLit,
    MethodSig,
    Param,
    QUANTIFIERS,
    RealLit,
    ResultRef,
    SelfRef,
    SourceSpan,
    StrLit,
    Unary,
    UnaryOp,
    contains_atpre,
)
from .errors import OclSyntaxError, ValidationError
from .lexer import Token, TokenKind, tokenize
from .validate import validate_clause

_REL_OPS = {"=": BinOp.EQ, "<>": BinOp.NE, "<": BinOp.LT,
            "<=": BinOp.LE, ">": BinOp.GT, ">=": BinOp.GE}
_ADD_OPS = {"+": BinOp.ADD, "-": BinOp.SUB}
_MUL_OPS = {"*": BinOp.MUL, "/": BinOp.DIV}
_COLL_OPS = {op.value: op for op in CollOp}
#: arity of the non-quantifier collection operations
_COLL_ARITY = {CollOp.SIZE: 0, CollOp.IS_EMPTY: 0, CollOp.NOT_EMPTY: 0,
               CollOp.INCLUDES: 1, CollOp.AT: 1}


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind is not TokenKind.EOF:
            self.pos += 1
        return tok

    def at(self, kind: TokenKind, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind is kind and (text is None or tok.text == text)

    def expect(self, kind: TokenKind, text: str | None = None) -> Token:
        tok = self.peek()
        if not self.at(kind, text):
            want = text if text is not None else kind.name.lower()
            raise OclSyntaxError(f"expected {want!r}, found {tok.text or 'end of input'!r}", tok.span)
        return self.advance()

    def error(self, message: str) -> OclSyntaxError:
        return OclSyntaxError(message, self.peek().span)

    # ---- expressions ----

    def expression(self) -> Expr:
        return self.implies_expr()

    def implies_expr(self) -> Expr:
        left = self.xor_expr()
        while self.at(TokenKind.KEYWORD, "implies"):
            self.advance()
            right = self.xor_expr()
            left = Binary(BinOp.IMPLIES, left, right, left.span)
        return left

    def xor_expr(self) -> Expr:
        left = self.or_expr()
        while self.at(TokenKind.KEYWORD, "xor"):
            self.advance()
            left = Binary(BinOp.XOR, left, self.or_expr(), left.span)
        return left

    def or_expr(self) -> Expr:
        left = self.and_expr()
        while self.at(TokenKind.KEYWORD, "or"):
            self.advance()
            left = Binary(BinOp.OR, left, self.and_expr(), left.span)
        return left

    def and_expr(self) -> Expr:
        left = self.rel_expr()
        while self.at(TokenKind.KEYWORD, "and"):
            self.advance()
            left = Binary(BinOp.AND, left, self.rel_expr(), left.span)
        return left

    def rel_expr(self) -> Expr:
        left = self.add_expr()
        tok = self.peek()
        if tok.kind is TokenKind.OP and tok.text in _REL_OPS:
            self.advance()
            right = self.add_expr()
            left = Binary(_REL_OPS[tok.text], left, right, left.span)
            nxt = self.peek()
            if nxt.kind is TokenKind.OP and nxt.text in _REL_OPS:
                raise OclSyntaxError("relational operators do not chain", nxt.span)
        return left

    def add_expr(self) -> Expr:
        left = self.mul_expr()
        while self.peek().kind is TokenKind.OP and self.peek().text in _ADD_OPS:
            op = _ADD_OPS[self.advance().text]
            left = Binary(op, left, self.mul_expr(), left.span)
        return left

    def mul_expr(self) -> Expr:
        left = self.unary_expr()
        while self.peek().kind is TokenKind.OP and self.peek().text in _MUL_OPS:
            op = _MUL_OPS[self.advance().text]
            left = Binary(op, left, self.unary_expr(), left.span)
        return left

    def unary_expr(self) -> Expr:
        if self.at(TokenKind.KEYWORD, "not"):
            tok = self.advance()
            return Unary(UnaryOp.NOT, self.unary_expr(), tok.span)
        if self.at(TokenKind.OP, "-"):
            tok = self.advance()
            return Unary(UnaryOp.NEG, self.unary_expr(), tok.span)
        return self.postfix_expr()

    def postfix_expr(self) -> Expr:
        node = self.primary()
        while True:
            if self.at(TokenKind.PUNCT, "."):
                self.advance()
                name = self.expect(TokenKind.IDENT).text
                node = self._member(node, name, node.span)
            elif self.at(TokenKind.PUNCT, "->"):
                self.advance()
                node = self.collection_op(node)
            elif self.at(TokenKind.AT_PRE):
                tok = self.advance()
                node = self._wrap_atpre(node, tok.span)
            else:
                return node

    def _member(self, receiver: Expr | None, name: str, span: SourceSpan) -> Expr:
        """A member reference after '.' or a leading name: field or call,
        with an optional @pre between the name and the argument list."""
        if self.at(TokenKind.AT_PRE):
            at_tok = self.advance()
            if self.at(TokenKind.PUNCT, "("):
                call = Call(receiver, name, self.call_args(), span)
                return self._wrap_atpre(call, at_tok.span)
            base: Expr
            if receiver is None:
                base = Ident(name, span)
            else:
                base = FieldAccess(receiver, name, span)
            return self._wrap_atpre(base, at_tok.span)
        if self.at(TokenKind.PUNCT, "("):
            return Call(receiver, name, self.call_args(), span)
        if receiver is None:
            return Ident(name, span)
        return FieldAccess(receiver, name, span)

    def _wrap_atpre(self, node: Expr, at_span: SourceSpan) -> Expr:
        if not isinstance(node, (Ident, FieldAccess, Call)):
            raise OclSyntaxError("@pre may only follow a name, field access, or call", at_span)
        if contains_atpre(node):
            raise OclSyntaxError("@pre may not nest inside another @pre", at_span)
        return AtPre(node, node.span)

    def call_args(self) -> tuple[Expr, ...]:
        self.expect(TokenKind.PUNCT, "(")
        args: list[Expr] = []
        if not self.at(TokenKind.PUNCT, ")"):
            args.append(self.expression())
            while self.at(TokenKind.PUNCT, ","):
                self.advance()
                args.append(self.expression())
        self.expect(TokenKind.PUNCT, ")")
        return tuple(args)

    def collection_op(self, receiver: Expr) -> Expr:
        name_tok = self.expect(TokenKind.IDENT)
        op = _COLL_OPS.get(name_tok.text)
        if op is None:
            raise OclSyntaxError(f"unknown collection operation {name_tok.text!r}", name_tok.span)
        self.expect(TokenKind.PUNCT, "(")
        if op in QUANTIFIERS:
            binder = self.expect(TokenKind.IDENT).text
            self.expect(TokenKind.PUNCT, "|")
            body = self.expression()
            self.expect(TokenKind.PUNCT, ")")
            return CollectionOp(receiver, op, binder, (body,), receiver.span)
        args: list[Expr] = []
        if not self.at(TokenKind.PUNCT, ")"):
            args.append(self.expression())
            while self.at(TokenKind.PUNCT, ","):
                self.advance()
                args.append(self.expression())
        close = self.peek()
        self.expect(TokenKind.PUNCT, ")")
        if len(args) != _COLL_ARITY[op]:
            raise OclSyntaxError(
                f"{op.value} takes {_COLL_ARITY[op]} argument(s), got {len(args)}", close.span)
        return CollectionOp(receiver, op, None, tuple(args), receiver.span)

    def primary(self) -> Expr:
        tok = self.peek()
        if tok.kind is TokenKind.INT:
            self.advance()
            return IntLit(int(tok.text), tok.span)
        if tok.kind is TokenKind.REAL:
            self.advance()
            return RealLit(float(tok.text), tok.span)
        if tok.kind is TokenKind.STRING:
            self.advance()
            return StrLit(tok.text[1:-1], tok.span)
        if tok.kind is TokenKind.BOOL:
            self.advance()
            return BoolLit(tok.text == "true", tok.span)
        if tok.kind is TokenKind.KEYWORD and tok.text == "self":
            self.advance()
            return SelfRef(tok.span)
        if tok.kind is TokenKind.KEYWORD and tok.text == "result":
            self.advance()
            return ResultRef(tok.span)
        if tok.kind is TokenKind.IDENT:
            self.advance()
            return self._member(None, tok.text, tok.span)
        if tok.kind is TokenKind.PUNCT and tok.text == "(":
            self.advance()
            inner = self.expression()
            self.expect(TokenKind.PUNCT, ")")
            return inner
        raise self.error(f"expected an expression, found {tok.text or 'end of input'!r}")

    # ---- constraint files ----

    def constraint_file(self, source_name: str) -> ConstraintFile:
        decls: list[ContextDecl] = []
        while self.at(TokenKind.KEYWORD, "context"):
            decls.append(self.context_decl())
        tok = self.peek()
        if tok.kind is not TokenKind.EOF:
            raise self.error(f"expected 'context', found {tok.text!r}")
        if not decls:
            raise OclSyntaxError("constraint file declares no contexts", tok.span)
        return ConstraintFile(tuple(decls), source_name)

    def context_decl(self) -> ContextDecl:
        self.expect(TokenKind.KEYWORD, "context")
        class_name = self.expect(TokenKind.IDENT).text
        method: MethodSig | None = None
        if self.at(TokenKind.PUNCT, "::"):
            self.advance()
            mname = self.expect(TokenKind.IDENT).text
            self.expect(TokenKind.PUNCT, "(")
            params: list[Param] = []
            if not self.at(TokenKind.PUNCT, ")"):
                params.append(self.param())
                while self.at(TokenKind.PUNCT, ","):
                    self.advance()
                    params.append(self.param())
            self.expect(TokenKind.PUNCT, ")")
            ret: str | None = None
            if self.at(TokenKind.PUNCT, ":"):
                self.advance()
                ret = self.expect(TokenKind.IDENT).text
            seen = set()
            for p in params:
                if p.name in seen:
                    raise self.error(f"duplicate parameter {p.name!r}")
                seen.add(p.name)
            method = MethodSig(mname, tuple(params), ret)
        clauses: list[Clause] = []
        while self.peek().kind is TokenKind.KEYWORD and self.peek().text in ("inv", "pre", "post"):
            clauses.append(self.clause())
        if not clauses:
            raise self.error("context declares no clauses")
        return ContextDecl(class_name, method, tuple(clauses))

    def param(self) -> Param:
        name = self.expect(TokenKind.IDENT).text
        self.expect(TokenKind.PUNCT, ":")
        type_name = self.expect(TokenKind.IDENT).text
        return Param(name, type_name)

    def clause(self) -> Clause:
        kind_tok = self.advance()
        kind = ClauseKind(kind_tok.text)
        label: str | None = None
        if self.at(TokenKind.IDENT):
            label = self.advance().text
        self.expect(TokenKind.PUNCT, ":")
        expr = self.expression()
        return Clause(kind, label, expr, kind_tok.span)


def parse_expression(source: str) -> Expr:
    """Parse a single expression; trailing input is an error."""
    parser = _Parser(tokenize(source))
    expr = parser.expression()
    tok = parser.peek()
    if tok.kind is not TokenKind.EOF:
        raise OclSyntaxError(f"unexpected trailing input {tok.text!r}", tok.span)
    return expr


def parse_constraint_file(source: str, source_name: str = "<string>") -> ConstraintFile:
    """Parse and validate a whole constraint file.

    Every clause is validated even after the first problem, so the raised
    ValidationError carries the full diagnostic list.
    """
    parser = _Parser(tokenize(source))
    cfile = parser.constraint_file(source_name)
    diagnostics = []
    for decl in cfile.decls:
        for cl in decl.clauses:
            diagnostics.extend(validate_clause(cl, decl))
    if diagnostics:
        raise ValidationError(diagnostics)
    return cfile
