"""Constraint registration and per-method effective sets.

Declared contexts are checked against the VM's class catalog; anything
that does not line up produces a warning and is excluded. The effective
set for a (dynamic class, method) pair folds the inheritance chain:

  invariants      conjunction, root class first, interfaces appended
  preconditions   one group per declaring type; groups are alternatives
  postconditions  conjunction over the whole chain
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..ocl.ast import Clause, ClauseKind, ConstraintFile, Expr
from ..ocl.validate import extract_pre_chains
from ..wire.mirrors import ClassMirror


@dataclass(frozen=True)
class BoundClause:
    clause: Clause
    context_class: str
    param_names: tuple[str, ...]


@dataclass
class ConstraintTable:
    invs: dict[str, list[BoundClause]] = field(default_factory=dict)
    methods: dict[tuple[str, str], dict[str, list[BoundClause]]] = \
        field(default_factory=dict)

    def has_any(self) -> bool:
        return bool(self.invs) or bool(self.methods)

    def context_types(self) -> set[str]:
        out = set(self.invs)
        out.update(cls for cls, _m in self.methods)
        return out


def build_constraint_table(
        cf: ConstraintFile,
        catalog: dict[str, ClassMirror]) -> tuple[ConstraintTable, list[str]]:
    table = ConstraintTable()
    warnings: list[str] = []
    for decl in cf.decls:
        cm = catalog.get(decl.class_name)
        if cm is None:
            warnings.append(
                f"unknown context class '{decl.class_name}'; its constraints"
                " are not checked")
            continue
        if decl.method is None:
            bucket = table.invs.setdefault(decl.class_name, [])
            for cl in decl.clauses:
                bucket.append(BoundClause(cl, decl.class_name, ()))
            continue
        sig = decl.method
        mm = cm.methods.get(sig.name)
        if mm is None:
            warnings.append(
                f"unknown method '{decl.class_name}::{sig.name}'; its"
                " constraints are not checked")
            continue
        if len(mm.params) != len(sig.params):
            warnings.append(
                f"'{decl.class_name}::{sig.name}' declares"
                f" {len(sig.params)} parameters but the class has"
                f" {len(mm.params)}; its constraints are not checked")
            continue
        key = (decl.class_name, sig.name)
        slot = table.methods.setdefault(key, {"pre": [], "post": []})
        names = decl.param_names
        for cl in decl.clauses:
            kind = "pre" if cl.kind is ClauseKind.PRE else "post"
            slot[kind].append(BoundClause(cl, decl.class_name, names))
    return table, warnings


@dataclass(frozen=True)
class EffectiveSet:
    invs: tuple[BoundClause, ...]
    pre_groups: tuple[tuple[str, tuple[BoundClause, ...]], ...]
    posts: tuple[BoundClause, ...]
    capture_chains: tuple[Expr, ...]
    chain_slots: dict[Expr, int]

    @property
    def empty(self) -> bool:
        return not (self.invs or self.pre_groups or self.posts)


def effective_for(table: ConstraintTable,
                  catalog: dict[str, ClassMirror],
                  dynamic_class: str, method: str) -> EffectiveSet:
    cm = catalog.get(dynamic_class)
    order = cm.chain(catalog) if cm is not None else [dynamic_class]

    invs: list[BoundClause] = []
    pre_groups: list[tuple[str, tuple[BoundClause, ...]]] = []
    posts: list[BoundClause] = []
    for tname in order:
        invs.extend(table.invs.get(tname, ()))
        slot = table.methods.get((tname, method))
        if not slot:
            continue
        if slot["pre"]:
            pre_groups.append((tname, tuple(slot["pre"])))
        posts.extend(slot["post"])

    chains: list[Expr] = []
    slots: dict[Expr, int] = {}
    for bc in posts:
        for chain in extract_pre_chains(bc.clause.expr):
            if chain not in slots:
                slots[chain] = len(chains)
                chains.append(chain)
    return EffectiveSet(tuple(invs), tuple(pre_groups), tuple(posts),
                        tuple(chains), slots)


def monitored_classes(table: ConstraintTable,
                      catalog: dict[str, ClassMirror]) -> list[str]:
    """Constrained types plus everything below them in the hierarchy."""
    wanted = table.context_types()
    return [name for name, cm in catalog.items()
            if wanted.intersection(cm.chain(catalog))]
