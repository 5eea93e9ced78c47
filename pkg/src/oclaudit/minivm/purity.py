"""Static purity enforcement.

A `pure` method must not write fields, mutate or allocate sequences or
objects, print, or call anything that might do so. MiniObj has no static
receiver types, so the callee check is conservative by name: calling a
name N is only allowed if every class in the program that declares N
declares it pure. Transitive purity follows by induction, since every
callee is checked against the same rule.
"""

from __future__ import annotations

from . import ast

# sequence built-ins that mutate their receiver
MUTATING_BUILTINS = {"add", "removeLast", "set"}
# sequence built-ins that only read
READONLY_BUILTINS = {"last", "size", "get"}


def check_purity(program: ast.Program) -> list[str]:
    """Returns diagnostics; empty means every pure method is side-effect free."""
    impure_declarers: dict[str, list[str]] = {}
    for cd in program.classes.values():
        for m in cd.methods.values():
            if not m.pure:
                impure_declarers.setdefault(m.name, []).append(cd.name)

    out: list[str] = []
    for cd in program.classes.values():
        fields = {fd.name for fd in program.field_order[cd.name]}
        for m in cd.methods.values():
            if m.pure:
                _check_body(cd, m, fields, impure_declarers, out)
    return out


def _check_body(cd, m, fields, impure_declarers, out):
    where = f"{cd.name}.{m.name}"
    # parameters are local bindings even when a field shares the name
    fields = fields - set(m.params)

    def flag(msg, line):
        out.append(f"{where}: {msg} (line {line})")

    def call_target(name, line):
        if name in MUTATING_BUILTINS:
            flag(f"mutating call in pure method: {name}()", line)
            return
        bad = impure_declarers.get(name)
        if bad:
            flag(f"pure calls non-pure {name}() (declared non-pure in {bad[0]})", line)

    def walk_expr(e):
        if isinstance(e, ast.ENew):
            flag(f"allocation in pure method: new {e.class_name}", e.line)
            for a in e.args:
                walk_expr(a)
        elif isinstance(e, ast.ECall):
            if e.receiver is None:
                if e.name == "seq":
                    flag("allocation in pure method: seq()", e.line)
                elif e.name == "print":
                    flag("print in pure method", e.line)
                else:
                    call_target(e.name, e.line)
            else:
                walk_expr(e.receiver)
                call_target(e.name, e.line)
            for a in e.args:
                walk_expr(a)
        elif isinstance(e, ast.EField):
            walk_expr(e.receiver)
        elif isinstance(e, ast.EUnary):
            walk_expr(e.operand)
        elif isinstance(e, ast.EBin):
            walk_expr(e.left)
            walk_expr(e.right)

    def walk_stmt(s):
        if isinstance(s, ast.Assign):
            if isinstance(s.target, ast.FieldTarget):
                flag(f"assignment to field {s.target.name} in pure method", s.line)
                walk_expr(s.target.receiver)
            elif s.target.name in fields:
                flag(f"assignment to field {s.target.name} in pure method", s.line)
            walk_expr(s.value)
        elif isinstance(s, ast.If):
            walk_expr(s.cond)
            for x in s.then:
                walk_stmt(x)
            for x in s.orelse:
                walk_stmt(x)
        elif isinstance(s, ast.While):
            walk_expr(s.cond)
            for x in s.body:
                walk_stmt(x)
        elif isinstance(s, ast.Return):
            if s.value is not None:
                walk_expr(s.value)
        elif isinstance(s, ast.ExprStmt):
            walk_expr(s.expr)

    for s in m.body:
        walk_stmt(s)
