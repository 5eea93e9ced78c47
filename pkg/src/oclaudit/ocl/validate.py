"""Clause validation and capture-chain extraction.

A postcondition may freeze entry-time values with @pre. A marker anywhere
in a navigation chain forces the whole chain to be evaluated at method
entry, so `v@pre.size()` is the entry-time size, not the entry-time
sequence probed at exit.
"""
from __future__ import annotations

from dataclasses import dataclass

from .ast import (
    AtPre,
    Binary,
    Call,
    Clause,
    ClauseKind,
    CollectionOp,
    ContextDecl,
    Expr,
    FieldAccess,
    Ident,
    QUANTIFIERS,
    ResultRef,
    SourceSpan,
    Unary,
    children,
    receiver_of,
)


@dataclass(frozen=True)
class Diagnostic:
    message: str
    span: SourceSpan


def _walk_unbound_idents(e: Expr, bound: frozenset[str], out: list[Ident]) -> None:
    if isinstance(e, Ident):
        if e.name not in bound:
            out.append(e)
        return
    if isinstance(e, CollectionOp) and e.op in QUANTIFIERS:
        _walk_unbound_idents(e.receiver, bound, out)
        inner = bound | {e.binder}
        for a in e.args:
            _walk_unbound_idents(a, inner, out)
        return
    for c in children(e):
        _walk_unbound_idents(c, bound, out)


def _find_nodes(e: Expr, node_type) -> list[Expr]:
    found = [e] if isinstance(e, node_type) else []
    for c in children(e):
        found.extend(_find_nodes(c, node_type))
    return found


def validate_clause(clause: Clause, context: ContextDecl) -> list[Diagnostic]:
    """Check a clause against its declaring context.

    Returns diagnostics instead of raising so a caller can sweep a whole
    file and report everything at once.
    """
    out: list[Diagnostic] = []
    kind = clause.kind

    if kind is ClauseKind.INV and context.method is not None:
        out.append(Diagnostic("inv requires a class context", clause.origin))
    if kind in (ClauseKind.PRE, ClauseKind.POST) and context.method is None:
        out.append(Diagnostic(f"{kind.value} requires a method context", clause.origin))

    if kind in (ClauseKind.INV, ClauseKind.PRE):
        for node in _find_nodes(clause.expr, ResultRef):
            out.append(Diagnostic(f"'result' not allowed in {kind.value} clause", node.span))
        for node in _find_nodes(clause.expr, AtPre):
            out.append(Diagnostic(f"'@pre' not allowed in {kind.value} clause", node.span))

    if kind is ClauseKind.INV:
        # Invariants have no parameters; fields must be written self.f.
        idents: list[Ident] = []
        _walk_unbound_idents(clause.expr, frozenset(), idents)
        for node in idents:
            out.append(Diagnostic(f"unknown parameter {node.name!r}", node.span))

    return out


def _spine_has_atpre(e: Expr) -> bool:
    node: Expr | None = e
    while node is not None:
        if isinstance(node, AtPre):
            return True
        node = receiver_of(node)
    return False


def extract_pre_chains(expr: Expr) -> tuple[Expr, ...]:
    """Maximal navigation chains containing an @pre marker, in source
    order, structurally deduplicated. The index in the returned tuple is
    the chain's capture slot."""
    chains: list[Expr] = []

    def visit(e: Expr, extendable: bool) -> None:
        if not extendable and _spine_has_atpre(e):
            if e not in chains:
                chains.append(e)
            return  # everything below belongs to this chain
        spine_child = receiver_of(e)
        for c in children(e):
            visit(c, extendable=c is spine_child)

    visit(expr, extendable=False)
    return tuple(chains)
