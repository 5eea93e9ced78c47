"""MiniObj front end: tokenizer, recursive-descent parser, and link checks.

parse_program() returns a Program whose class graph is fully resolved:
duplicate names, unknown extends/implements targets, inheritance cycles,
subclass field redeclaration, and a missing or duplicated `main` block are
all rejected here with line-numbered diagnostics.
"""

from __future__ import annotations

import re

from . import ast

KEYWORDS = {
    "class", "extends", "implements", "interface", "public", "private",
    "pure", "var", "def", "main", "if", "else", "while", "return",
    "true", "false", "null", "self", "new",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*)
  | (?P<real>\d+\.\d+)
  | (?P<int>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<str>"[^"\n]*")
  | (?P<op>&&|\|\||==|!=|<=|>=|[-+*/<>!=.,;(){}])
    """,
    re.VERBOSE,
)


class MiniParseError(Exception):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def tokenize(src: str):
    """Yields (kind, text, line); kind is one of int real name str op kw eof."""
    toks = []
    line = 1
    pos = 0
    n = len(src)
    while pos < n:
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise MiniParseError(f"unexpected character {src[pos]!r}", line)
        kind = m.lastgroup
        text = m.group()
        if kind == "ws" or kind == "comment":
            line += text.count("\n")
        elif kind == "name":
            toks.append(("kw" if text in KEYWORDS else "name", text, line))
        elif kind == "str":
            toks.append(("str", text[1:-1], line))
        else:
            toks.append((kind, text, line))
        pos = m.end()
    toks.append(("eof", "", line))
    return toks


class _P:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def at(self, kind, text=None):
        k, t, _ = self.peek()
        return k == kind and (text is None or t == text)

    def accept(self, kind, text=None):
        if self.at(kind, text):
            return self.next()
        return None

    def expect(self, kind, text=None, what=None):
        if self.at(kind, text):
            return self.next()
        k, t, line = self.peek()
        got = t if t else "end of input"
        want = what or text or kind
        raise MiniParseError(f"expected {want}, found {got!r}", line)

    # --- declarations ---

    def program(self):
        classes: dict[str, ast.ClassDef] = {}
        interfaces: dict[str, ast.InterfaceDef] = {}
        mains = []
        while not self.at("eof"):
            if self.at("kw", "class"):
                cd = self.classdef()
                if cd.name in classes or cd.name in interfaces:
                    raise MiniParseError(f"duplicate class {cd.name}", cd.line)
                classes[cd.name] = cd
            elif self.at("kw", "interface"):
                idef = self.interfacedef()
                if idef.name in classes or idef.name in interfaces:
                    raise MiniParseError(f"duplicate class {idef.name}", idef.line)
                interfaces[idef.name] = idef
            elif self.at("kw", "main"):
                _, _, line = self.next()
                if mains:
                    raise MiniParseError("duplicate main block", line)
                mains.append(self.block())
            else:
                k, t, line = self.peek()
                raise MiniParseError(
                    f"expected class, interface or main, found {t!r}", line
                )
        if not mains:
            raise MiniParseError("program has no main block", self.peek()[2])
        return ast.Program(classes, interfaces, mains[0])

    def classdef(self):
        _, _, line = self.expect("kw", "class")
        name = self.expect("name", what="class name")[1]
        base = None
        impls: list[str] = []
        if self.accept("kw", "extends"):
            base = self.expect("name", what="base class name")[1]
        if self.accept("kw", "implements"):
            impls.append(self.expect("name", what="interface name")[1])
            while self.accept("op", ","):
                impls.append(self.expect("name", what="interface name")[1])
        self.expect("op", "{")
        fields: list[ast.FieldDecl] = []
        methods: dict[str, ast.MethodDef] = {}
        while not self.at("op", "}"):
            vis = "public"
            if self.accept("kw", "public"):
                vis = "public"
            elif self.accept("kw", "private"):
                vis = "private"
            if self.at("kw", "var"):
                _, _, fline = self.next()
                fname = self.expect("name", what="field name")[1]
                self.expect("op", ";")
                if any(f.name == fname for f in fields) or fname in methods:
                    raise MiniParseError(f"duplicate member {fname}", fline)
                fields.append(ast.FieldDecl(fname, vis, fline))
            else:
                m = self.methoddef(vis)
                if m.name in methods or any(f.name == m.name for f in fields):
                    raise MiniParseError(f"duplicate member {m.name}", m.line)
                methods[m.name] = m
        self.expect("op", "}")
        return ast.ClassDef(name, base, impls, fields, methods, line)

    def methoddef(self, vis):
        pure = self.accept("kw", "pure") is not None
        _, _, line = self.expect("kw", "def")
        name = self.expect("name", what="method name")[1]
        params = self.paramlist(line)
        body = self.block()
        return ast.MethodDef(name, params, pure, vis, body, line)

    def interfacedef(self):
        _, _, line = self.expect("kw", "interface")
        name = self.expect("name", what="interface name")[1]
        self.expect("op", "{")
        sigs: dict[str, ast.MethodSig] = {}
        while not self.at("op", "}"):
            pure = self.accept("kw", "pure") is not None
            _, _, mline = self.expect("kw", "def")
            mname = self.expect("name", what="method name")[1]
            params = self.paramlist(mline)
            self.expect("op", ";")
            if mname in sigs:
                raise MiniParseError(f"duplicate member {mname}", mline)
            sigs[mname] = ast.MethodSig(mname, params, pure, mline)
        self.expect("op", "}")
        return ast.InterfaceDef(name, sigs, line)

    def paramlist(self, line):
        self.expect("op", "(")
        params: list[str] = []
        if not self.at("op", ")"):
            params.append(self.expect("name", what="parameter name")[1])
            while self.accept("op", ","):
                params.append(self.expect("name", what="parameter name")[1])
        self.expect("op", ")")
        if len(set(params)) != len(params):
            raise MiniParseError("duplicate parameter name", line)
        return params

    # --- statements ---

    def block(self):
        self.expect("op", "{")
        stmts = []
        while not self.at("op", "}"):
            stmts.append(self.stmt())
        self.expect("op", "}")
        return stmts

    def stmt(self):
        k, t, line = self.peek()
        if k == "kw" and t == "if":
            self.next()
            self.expect("op", "(")
            cond = self.expr()
            self.expect("op", ")")
            then = self.block()
            orelse = []
            if self.accept("kw", "else"):
                orelse = self.block()
            return ast.If(cond, then, orelse, line)
        if k == "kw" and t == "while":
            self.next()
            self.expect("op", "(")
            cond = self.expr()
            self.expect("op", ")")
            return ast.While(cond, self.block(), line)
        if k == "kw" and t == "return":
            self.next()
            value = None
            if not self.at("op", ";"):
                value = self.expr()
            self.expect("op", ";")
            return ast.Return(value, line)
        e = self.expr()
        if self.accept("op", "="):
            target = self._as_target(e)
            value = self.expr()
            self.expect("op", ";")
            return ast.Assign(target, value, line)
        self.expect("op", ";")
        return ast.ExprStmt(e, line)

    def _as_target(self, e):
        if isinstance(e, ast.EName):
            return ast.NameTarget(e.name, e.line)
        if isinstance(e, ast.EField):
            return ast.FieldTarget(e.receiver, e.name, e.line)
        line = getattr(e, "line", 0)
        raise MiniParseError("invalid assignment target", line)

    # --- expressions, lowest precedence first ---

    def expr(self):
        return self.or_()

    def or_(self):
        e = self.and_()
        while self.at("op", "||"):
            _, _, line = self.next()
            e = ast.EBin("||", e, self.and_(), e.line)
        return e

    def and_(self):
        e = self.eq()
        while self.at("op", "&&"):
            self.next()
            e = ast.EBin("&&", e, self.eq(), e.line)
        return e

    def eq(self):
        e = self.rel()
        while self.at("op", "==") or self.at("op", "!="):
            op = self.next()[1]
            e = ast.EBin(op, e, self.rel(), e.line)
        return e

    def rel(self):
        e = self.add()
        while (
            self.at("op", "<") or self.at("op", "<=")
            or self.at("op", ">") or self.at("op", ">=")
        ):
            op = self.next()[1]
            e = ast.EBin(op, e, self.add(), e.line)
        return e

    def add(self):
        e = self.mul()
        while self.at("op", "+") or self.at("op", "-"):
            op = self.next()[1]
            e = ast.EBin(op, e, self.mul(), e.line)
        return e

    def mul(self):
        e = self.unary()
        while self.at("op", "*") or self.at("op", "/"):
            op = self.next()[1]
            e = ast.EBin(op, e, self.unary(), e.line)
        return e

    def unary(self):
        if self.at("op", "!") or self.at("op", "-"):
            _, op, line = self.next()
            return ast.EUnary(op, self.unary(), line)
        return self.postfix()

    def postfix(self):
        e = self.primary()
        while self.accept("op", "."):
            name_tok = self.expect("name", what="member name")
            name, line = name_tok[1], name_tok[2]
            if self.at("op", "("):
                e = ast.ECall(e, name, self.args(), line)
            else:
                e = ast.EField(e, name, line)
        return e

    def args(self):
        self.expect("op", "(")
        out = []
        if not self.at("op", ")"):
            out.append(self.expr())
            while self.accept("op", ","):
                out.append(self.expr())
        self.expect("op", ")")
        return out

    def primary(self):
        k, t, line = self.peek()
        if k == "int":
            self.next()
            value = int(t)
            if value > 2**63 - 1:
                raise MiniParseError("integer literal out of range", line)
            return ast.EInt(value, line)
        if k == "real":
            self.next()
            return ast.EReal(float(t), line)
        if k == "str":
            self.next()
            return ast.EStr(t, line)
        if k == "kw":
            if t == "true" or t == "false":
                self.next()
                return ast.EBool(t == "true", line)
            if t == "null":
                self.next()
                return ast.ENull(line)
            if t == "self":
                self.next()
                return ast.ESelf(line)
            if t == "new":
                self.next()
                cname = self.expect("name", what="class name")[1]
                return ast.ENew(cname, self.args(), line)
        if k == "name":
            self.next()
            if self.at("op", "("):
                return ast.ECall(None, t, self.args(), line)
            return ast.EName(t, line)
        if self.accept("op", "("):
            e = self.expr()
            self.expect("op", ")")
            return e
        got = t if t else "end of input"
        raise MiniParseError(f"expected an expression, found {got!r}", line)


def _link(p: ast.Program) -> None:
    for cd in p.classes.values():
        if cd.base is not None:
            if cd.base not in p.classes:
                raise MiniParseError(f"unknown base class {cd.base}", cd.line)
        for iname in cd.interfaces:
            if iname not in p.interfaces:
                raise MiniParseError(f"unknown interface {iname}", cd.line)

    # cycle check by walking each chain with a visited set
    for cd in p.classes.values():
        seen = set()
        cur = cd.name
        while cur is not None:
            if cur in seen:
                raise MiniParseError(f"inheritance cycle through {cur}", cd.line)
            seen.add(cur)
            cur = p.classes[cur].base

    for cd in p.classes.values():
        flat: list[ast.FieldDecl] = []
        names = set()
        for cls in p.chain(cd.name):
            for fd in p.classes[cls].fields:
                if fd.name in names:
                    raise MiniParseError(
                        f"field {fd.name} redeclared in subclass {cls}", fd.line
                    )
                names.add(fd.name)
                flat.append(fd)
        p.field_order[cd.name] = flat


def parse_program(source: str) -> ast.Program:
    prog = _P(tokenize(source)).program()
    _link(prog)
    return prog
